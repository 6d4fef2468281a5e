//! Phase mismatch, phasematched wavelength solving, and the phasematching
//! amplitude for homogeneous and inhomogeneous birefringence.
//!
//! Process: two pump photons on the slow axis convert into a signal/idler
//! pair on the fast axis. The phase mismatch at signal/idler frequencies
//! `(omega_s, omega_i)` is
//!
//! ```text
//! delta_k = 2 k_slow(omega_p) - k_fast(omega_s) - k_fast(omega_i),
//! omega_p = (omega_s + omega_i) / 2.
//! ```
//!
//! Because the axis split enters the indices as +/- delta_n/2, `delta_k`
//! is affine in the birefringence: a local change `eps` in delta_n shifts it
//! by `eps * (omega_s + omega_i) / c`. Inhomogeneity along the waveguide is
//! therefore captured by one scalar profile `delta_n(z)`.
//!
//! The phasematching amplitude is the normalized integral of the local
//! phase factor over the waveguide,
//!
//! ```text
//! phi = (1/L) * integral_0^L exp(i z delta_k(z)) dz,
//! ```
//!
//! evaluated exactly on each constant-birefringence segment: a segment
//! `[z0, z1]` with local mismatch `kappa` contributes
//! `exp(i kappa (z0+z1)/2) * sinc(kappa h / 2) * h / L` with `h = z1 - z0`.
//! For a homogeneous waveguide this reduces to the familiar
//! `exp(i delta_k L / 2) * sinc(delta_k L / 2)`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{Axis, BirefringentWaveguide, DispersionError};
use crate::units::{angular_frequency_rad_per_ps, sinc, SPEED_OF_LIGHT_UM_PER_PS};

#[derive(Debug, Error)]
pub enum PhasematchError {
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error("no phasematched signal/idler pair found for pump {pump_nm} nm")]
    NoSolution { pump_nm: f64 },
    #[error("phasematching integral did not converge below {tol} (reached {reached} at {subintervals} subintervals)")]
    QuadratureStall {
        tol: f64,
        reached: f64,
        subintervals: usize,
    },
    #[error("random profile needs at least 2 segments, got {0}")]
    TooFewSegments(usize),
}

/// Phase mismatch (rad/um) for cross-polarized SFWM with the pump at the
/// mean frequency of signal and idler.
pub fn delta_k(
    wg: &BirefringentWaveguide,
    omega_s: f64,
    omega_i: f64,
) -> Result<f64, DispersionError> {
    let omega_p = 0.5 * (omega_s + omega_i);
    Ok(2.0 * wg.wavenumber(Axis::Slow, omega_p)?
        - wg.wavenumber(Axis::Fast, omega_s)?
        - wg.wavenumber(Axis::Fast, omega_i)?)
}

/// Sensitivity of [`delta_k`] to a uniform shift of the birefringence:
/// `d(delta_k)/d(delta_n) = (omega_s + omega_i) / c`, rad/um per unit index.
pub fn delta_k_birefringence_slope(omega_s: f64, omega_i: f64) -> f64 {
    (omega_s + omega_i) / SPEED_OF_LIGHT_UM_PER_PS
}

/// Idler wavelength (nm) completing energy conservation
/// `2/lambda_p = 1/lambda_s + 1/lambda_i`.
pub fn energy_conjugate_wavelength_nm(pump_nm: f64, signal_nm: f64) -> f64 {
    1.0 / (2.0 / pump_nm - 1.0 / signal_nm)
}

/// A phasematched signal/idler pair.
#[derive(Debug, Clone, Serialize)]
pub struct PhasematchSolution {
    pub signal_nm: f64,
    pub idler_nm: f64,
    /// |delta_k| * L at the returned solution (dimensionless).
    pub residual: f64,
}

/// Find the non-degenerate signal/idler pair phasematched for the given
/// pump, with the signal on the short-wavelength side.
///
/// Scans the signal wavelength for a sign change of [`delta_k`], then
/// bisects until `|delta_k| * L < 1e-6`.
pub fn solve_phasematch(
    wg: &BirefringentWaveguide,
    pump_nm: f64,
    length_um: f64,
) -> Result<PhasematchSolution, PhasematchError> {
    let omega_p = angular_frequency_rad_per_ps(pump_nm);
    let (min_nm, max_nm) = wg.sellmeier.valid_nm;
    // Keep both signal and the conjugate idler inside the dispersion model's
    // validity window.
    let signal_floor = {
        let inv = 2.0 / pump_nm - 1.0 / max_nm;
        (1.0 / inv).max(min_nm) + 0.1
    };
    let signal_ceil = pump_nm - 0.05;
    if !(signal_floor < signal_ceil) {
        return Err(PhasematchError::NoSolution { pump_nm });
    }
    let mismatch = |signal_nm: f64| -> Result<f64, DispersionError> {
        let omega_s = angular_frequency_rad_per_ps(signal_nm);
        delta_k(wg, omega_s, 2.0 * omega_p - omega_s)
    };
    // Scan downward from just below degeneracy so the first sign change is
    // the branch continuous with the degenerate point; for long pumps a
    // second, far-detuned zero exists near the infrared validity edge and
    // must not be picked up.
    const SCAN: usize = 400;
    let mut prev_nm = signal_ceil;
    let mut prev_dk = mismatch(prev_nm)?;
    let mut bracket = None;
    for j in 1..=SCAN {
        let nm = signal_ceil - (signal_ceil - signal_floor) * j as f64 / SCAN as f64;
        let dk = mismatch(nm)?;
        if dk == 0.0 || dk.signum() != prev_dk.signum() {
            bracket = Some((prev_nm, prev_dk, nm));
            break;
        }
        prev_nm = nm;
        prev_dk = dk;
    }
    let (mut lo, mut dk_lo, mut hi) = bracket.ok_or(PhasematchError::NoSolution { pump_nm })?;
    let mut mid = 0.5 * (lo + hi);
    let mut dk_mid = mismatch(mid)?;
    for _ in 0..200 {
        if dk_mid.abs() * length_um < 1e-9 {
            break;
        }
        if dk_mid.signum() == dk_lo.signum() {
            lo = mid;
            dk_lo = dk_mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        dk_mid = mismatch(mid)?;
    }
    let residual = dk_mid.abs() * length_um;
    if residual >= 1e-6 {
        return Err(PhasematchError::NoSolution { pump_nm });
    }
    Ok(PhasematchSolution {
        signal_nm: mid,
        idler_nm: energy_conjugate_wavelength_nm(pump_nm, mid),
        residual,
    })
}

/// Birefringence variation along the waveguide, as a deviation from the
/// nominal `delta_n0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "lowercase", deny_unknown_fields)]
pub enum BirefringenceProfile {
    /// Constant birefringence.
    Uniform,
    /// Linear ramp: the deviation grows from 0 at the input facet to
    /// `delta_dn` at the output facet.
    #[serde(rename = "linear")]
    LinearGradient { delta_dn: f64 },
    /// Piecewise-constant random profile: `segments` equal-length segments
    /// whose delta-n values have sample mean exactly `delta_n0` and sample
    /// standard deviation exactly `delta_dn`. Draws are standard normal,
    /// truncated at +/-4, then standardized; a fixed seed gives a bit-exact
    /// profile.
    #[serde(rename = "random")]
    RandomSegments {
        delta_dn: f64,
        #[serde(default = "default_segments")]
        segments: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_segments() -> usize {
    400
}

impl Default for BirefringenceProfile {
    fn default() -> Self {
        BirefringenceProfile::Uniform
    }
}

/// One constant-birefringence segment: `[z0_um, z1_um)` with deviation
/// `offset` from the nominal delta_n0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub z0_um: f64,
    pub z1_um: f64,
    pub offset: f64,
}

impl BirefringenceProfile {
    /// Materialize as equal-length constant segments. For the linear
    /// gradient, `subintervals` controls the piecewise-constant midpoint
    /// approximation; uniform and random profiles are exact at their own
    /// natural segmentation and ignore `subintervals`.
    pub fn materialize(
        &self,
        length_um: f64,
        subintervals: usize,
    ) -> Result<Vec<Segment>, PhasematchError> {
        match *self {
            BirefringenceProfile::Uniform => Ok(vec![Segment {
                z0_um: 0.0,
                z1_um: length_um,
                offset: 0.0,
            }]),
            BirefringenceProfile::LinearGradient { delta_dn } => {
                let h = length_um / subintervals as f64;
                Ok((0..subintervals)
                    .map(|j| {
                        let z0 = j as f64 * h;
                        let mid = z0 + 0.5 * h;
                        Segment {
                            z0_um: z0,
                            z1_um: z0 + h,
                            offset: delta_dn * mid / length_um,
                        }
                    })
                    .collect())
            }
            BirefringenceProfile::RandomSegments {
                delta_dn,
                segments,
                seed,
            } => {
                if segments < 2 {
                    return Err(PhasematchError::TooFewSegments(segments));
                }
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                let mut z: Vec<f64> = (0..segments)
                    .map(|_| {
                        let v: f64 = StandardNormal.sample(&mut rng);
                        v.clamp(-4.0, 4.0)
                    })
                    .collect();
                let mean = z.iter().sum::<f64>() / segments as f64;
                for v in &mut z {
                    *v -= mean;
                }
                let var = z.iter().map(|v| v * v).sum::<f64>() / (segments as f64 - 1.0);
                let scale = if var > 0.0 { delta_dn / var.sqrt() } else { 0.0 };
                let h = length_um / segments as f64;
                Ok(z
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| Segment {
                        z0_um: j as f64 * h,
                        z1_um: (j as f64 + 1.0) * h,
                        offset: scale * v,
                    })
                    .collect())
            }
        }
    }
}

/// Homogeneous phasematching amplitude `exp(i x) sinc(x)`, `x = delta_k L/2`.
pub fn phi_uniform(delta_k: f64, length_um: f64) -> Complex64 {
    let x = 0.5 * delta_k * length_um;
    Complex64::from_polar(1.0, x) * sinc(x)
}

/// Phasematching amplitude for a piecewise-constant profile, given the
/// nominal mismatch `delta_k0` and the birefringence slope
/// `g = (omega_s+omega_i)/c`. Exact per segment; `|phi| <= 1` always.
pub fn phi_segments(delta_k0: f64, g: f64, segments: &[Segment], length_um: f64) -> Complex64 {
    let mut phi = Complex64::new(0.0, 0.0);
    for seg in segments {
        let h = seg.z1_um - seg.z0_um;
        let kappa = delta_k0 + g * seg.offset;
        let mid = 0.5 * (seg.z0_um + seg.z1_um);
        phi += Complex64::from_polar(1.0, kappa * mid) * (sinc(0.5 * kappa * h) * h / length_um);
    }
    phi
}

/// Phasematching amplitude for an arbitrary profile at one spectral point.
///
/// Uniform and random profiles are evaluated exactly. The linear gradient is
/// refined by doubling the subdivision (starting at 512) until successive
/// values agree to `1e-6`.
pub fn phasematch_amplitude(
    wg: &BirefringentWaveguide,
    profile: &BirefringenceProfile,
    length_um: f64,
    omega_s: f64,
    omega_i: f64,
) -> Result<Complex64, PhasematchError> {
    let dk0 = delta_k(wg, omega_s, omega_i)?;
    let g = delta_k_birefringence_slope(omega_s, omega_i);
    match profile {
        BirefringenceProfile::Uniform => Ok(phi_uniform(dk0, length_um)),
        BirefringenceProfile::RandomSegments { .. } => {
            let segs = profile.materialize(length_um, 0)?;
            Ok(phi_segments(dk0, g, &segs, length_um))
        }
        BirefringenceProfile::LinearGradient { .. } => {
            let tol = 1e-6;
            let mut n = 512usize;
            let mut prev = phi_segments(dk0, g, &profile.materialize(length_um, n)?, length_um);
            loop {
                n *= 2;
                let next = phi_segments(dk0, g, &profile.materialize(length_um, n)?, length_um);
                let diff = (next - prev).norm();
                if diff < tol {
                    return Ok(next);
                }
                if n >= 1 << 16 {
                    return Err(PhasematchError::QuadratureStall {
                        tol,
                        reached: diff,
                        subintervals: n,
                    });
                }
                prev = next;
            }
        }
    }
}

/// Subdivision count at which the linear-gradient amplitude is converged to
/// `1e-6` at the given spectral point (used to fix one subdivision for a
/// whole grid).
pub fn converged_subdivision(
    wg: &BirefringentWaveguide,
    profile: &BirefringenceProfile,
    length_um: f64,
    omega_s: f64,
    omega_i: f64,
) -> Result<usize, PhasematchError> {
    match profile {
        BirefringenceProfile::Uniform | BirefringenceProfile::RandomSegments { .. } => Ok(1),
        BirefringenceProfile::LinearGradient { .. } => {
            let dk0 = delta_k(wg, omega_s, omega_i)?;
            let g = delta_k_birefringence_slope(omega_s, omega_i);
            let mut n = 512usize;
            let mut prev = phi_segments(dk0, g, &profile.materialize(length_um, n)?, length_um);
            loop {
                let next =
                    phi_segments(dk0, g, &profile.materialize(length_um, 2 * n)?, length_um);
                if (next - prev).norm() < 1e-6 {
                    return Ok(2 * n);
                }
                n *= 2;
                if n >= 1 << 16 {
                    return Err(PhasematchError::QuadratureStall {
                        tol: 1e-6,
                        reached: (next - prev).norm(),
                        subintervals: n,
                    });
                }
                prev = next;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn wg() -> BirefringentWaveguide {
        BirefringentWaveguide::default_silica()
    }

    #[test]
    fn mismatch_is_positive_at_degeneracy() {
        // At degeneracy only the birefringence term survives:
        // delta_k = 2 delta_n0 omega_p / c > 0.
        let w = angular_frequency_rad_per_ps(729.0);
        let dk = delta_k(&wg(), w, w).unwrap();
        let expect = 2.0 * 1e-4 * w / SPEED_OF_LIGHT_UM_PER_PS;
        assert_relative_eq!(dk, expect, max_relative = 1e-9);
    }

    #[test]
    fn birefringence_shift_is_affine() {
        let ws = angular_frequency_rad_per_ps(676.0);
        let wi = angular_frequency_rad_per_ps(790.0);
        let base = delta_k(&wg(), ws, wi).unwrap();
        for &eps in &[1e-6, -3e-6, 2.5e-5] {
            let mut shifted = wg();
            shifted.delta_n0 += eps;
            let dk = delta_k(&shifted, ws, wi).unwrap();
            let predicted = base + eps * delta_k_birefringence_slope(ws, wi);
            assert_relative_eq!(dk, predicted, epsilon = 1e-14);
        }
    }

    #[test]
    fn solves_nondegenerate_pair_for_729_pump() {
        let sol = solve_phasematch(&wg(), 729.0, 40_000.0).unwrap();
        assert_relative_eq!(sol.signal_nm, 676.12, epsilon = 0.05);
        assert_relative_eq!(sol.idler_nm, 790.86, epsilon = 0.05);
        assert!(sol.residual < 1e-6);
        // Energy conservation holds exactly by construction.
        assert_relative_eq!(
            2.0 / 729.0,
            1.0 / sol.signal_nm + 1.0 / sol.idler_nm,
            max_relative = 1e-12
        );
    }

    #[test]
    fn uniform_amplitude_matches_closed_form() {
        let l = 40_000.0;
        // |phi| = 2/(3 pi) at delta_k L / 2 = 3 pi / 2.
        let dk = 3.0 * std::f64::consts::PI / l;
        let phi = phi_uniform(dk, l);
        assert_relative_eq!(phi.norm(), 2.0 / (3.0 * std::f64::consts::PI), max_relative = 1e-12);
        assert_relative_eq!(phi_uniform(0.0, l).norm(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn segment_sum_reduces_to_uniform() {
        let l = 40_000.0;
        let profile = BirefringenceProfile::LinearGradient { delta_dn: 0.0 };
        let segs = profile.materialize(l, 512).unwrap();
        for &dk in &[0.0, 1e-5, 3e-4, -2e-4] {
            let a = phi_segments(dk, 50.0, &segs, l);
            let b = phi_uniform(dk, l);
            assert!((a - b).norm() < 1e-8, "dk={dk}: {a} vs {b}");
        }
    }

    #[test]
    fn random_profile_sample_stats_are_exact() {
        let profile = BirefringenceProfile::RandomSegments {
            delta_dn: 2.5e-6,
            segments: 400,
            seed: 11,
        };
        let segs = profile.materialize(40_000.0, 0).unwrap();
        let n = segs.len() as f64;
        let mean = segs.iter().map(|s| s.offset).sum::<f64>() / n;
        let var = segs.iter().map(|s| (s.offset - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 1e-18);
        assert_relative_eq!(var.sqrt(), 2.5e-6, max_relative = 1e-12);
        assert!(segs.iter().all(|s| s.offset.abs() < 4.5 * 2.5e-6));
    }

    #[test]
    fn random_profile_is_reproducible() {
        let profile = BirefringenceProfile::RandomSegments {
            delta_dn: 1e-6,
            segments: 400,
            seed: 7,
        };
        let a = profile.materialize(40_000.0, 0).unwrap();
        let b = profile.materialize(40_000.0, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn amplitude_magnitude_never_exceeds_one() {
        let l = 40_000.0;
        let ws = angular_frequency_rad_per_ps(676.0);
        let wi = angular_frequency_rad_per_ps(790.0);
        for seed in 0..20 {
            let profile = BirefringenceProfile::RandomSegments {
                delta_dn: 3e-6,
                segments: 400,
                seed,
            };
            let phi = phasematch_amplitude(&wg(), &profile, l, ws, wi).unwrap();
            assert!(phi.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn profile_json_round_trip() {
        let p: BirefringenceProfile =
            serde_json::from_str(r#"{"profile":"random","delta_dn":1e-6,"segments":200,"seed":3}"#)
                .unwrap();
        assert_eq!(
            p,
            BirefringenceProfile::RandomSegments {
                delta_dn: 1e-6,
                segments: 200,
                seed: 3
            }
        );
        let u: BirefringenceProfile = serde_json::from_str(r#"{"profile":"uniform"}"#).unwrap();
        assert_eq!(u, BirefringenceProfile::Uniform);
        assert!(serde_json::from_str::<BirefringenceProfile>(r#"{"profile":"linear"}"#).is_err());
    }
}
