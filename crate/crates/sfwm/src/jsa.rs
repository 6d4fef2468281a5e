//! Joint spectral amplitudes: pump envelope, spectral grids, JSA assembly,
//! filters, marginals, and lobe-shape diagnostics.
//!
//! The joint amplitude over signal/idler angular frequencies is
//! `f(omega_s, omega_i) = A(omega_s + omega_i) * phi(omega_s, omega_i)`,
//! where `A` is the sum-frequency envelope of the pump pulse (the
//! autoconvolution of its field spectrum) and `phi` the phasematching
//! amplitude. Grids are uniform in angular frequency; `f` is L2-normalized
//! so that `sum |f|^2 d_omega_s d_omega_i = 1`.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{Axis, BirefringentWaveguide};
use crate::phasematch::{
    self, delta_k_birefringence_slope, phi_segments, solve_phasematch, BirefringenceProfile,
    PhasematchError,
};
use crate::units::{
    angular_frequency_rad_per_ps, bandwidth_rad_per_ps, wavelength_nm_from_angular_frequency,
    SPEED_OF_LIGHT_UM_PER_PS,
};

/// Half-width of the central sinc^2 lobe at half maximum:
/// sinc^2(x) = 1/2 at x = 1.3915573498.
pub const SINC_SQ_HALF_MAX_X: f64 = 1.391_557_349_8;

#[derive(Debug, Error)]
pub enum GridError {
    #[error(transparent)]
    Dispersion(#[from] crate::dispersion::DispersionError),
    #[error(transparent)]
    Phasematch(#[from] PhasematchError),
    #[error("grid needs at least 16 points per axis, got {0}")]
    TooFewPoints(usize),
    #[error("{arm} span {span_rad_per_ps:.3} rad/ps is below the required coverage {required_rad_per_ps:.3} rad/ps (6x the wider of pump and phasematching widths)")]
    CoverageTooSmall {
        arm: &'static str,
        span_rad_per_ps: f64,
        required_rad_per_ps: f64,
    },
    #[error("filter transmits nothing on the sampled grid")]
    ZeroTransmission,
}

/// Which output arm of the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Signal,
    Idler,
}

/// Transform-limited Gaussian pump pulse, described by its center wavelength
/// and the FWHM of its spectral intensity in wavelength.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PumpPulse {
    pub center_nm: f64,
    pub bandwidth_fwhm_nm: f64,
}

impl PumpPulse {
    pub fn omega_center(&self) -> f64 {
        angular_frequency_rad_per_ps(self.center_nm)
    }

    /// Gaussian width parameter sigma of the field amplitude
    /// `exp(-(omega-omega_p)^2 / (2 sigma^2))`, such that the intensity FWHM
    /// equals `bandwidth_fwhm_nm`.
    pub fn sigma_rad_per_ps(&self) -> f64 {
        bandwidth_rad_per_ps(self.bandwidth_fwhm_nm, self.center_nm)
            / (2.0 * (2f64.ln()).sqrt())
    }

    /// Sum-frequency envelope `A(omega_s + omega_i)`: the autoconvolution of
    /// the pump field spectrum, normalized to 1 at its peak `2 omega_p`.
    /// Closed form for a Gaussian: `exp(-(Omega - 2 omega_p)^2 / (4 sigma^2))`.
    pub fn sum_envelope(&self, omega_sum: f64) -> f64 {
        let s = self.sigma_rad_per_ps();
        let d = omega_sum - 2.0 * self.omega_center();
        (-d * d / (4.0 * s * s)).exp()
    }

    /// Same envelope by direct numerical autoconvolution (composite Simpson
    /// over +/-10 sigma), for cross-checking the closed form.
    pub fn sum_envelope_quadrature(&self, omega_sum: f64, intervals: usize) -> f64 {
        let s = self.sigma_rad_per_ps();
        let wp = self.omega_center();
        let amp = |w: f64| (-(w - wp) * (w - wp) / (2.0 * s * s)).exp();
        let integrand = |w: f64| amp(w) * amp(omega_sum - w);
        let (a, b) = (wp - 10.0 * s, wp + 10.0 * s);
        let n = intervals + intervals % 2;
        let h = (b - a) / n as f64;
        let mut acc = integrand(a) + integrand(b);
        for j in 1..n {
            let w = a + j as f64 * h;
            acc += integrand(w) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        // Peak value of the same integral is sigma * sqrt(pi).
        acc * h / 3.0 / (s * std::f64::consts::PI.sqrt())
    }
}

/// Rectangular spectral grid, uniform in angular frequency on each axis.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralGrid {
    pub signal_center_rad_per_ps: f64,
    pub idler_center_rad_per_ps: f64,
    pub signal_span_rad_per_ps: f64,
    pub idler_span_rad_per_ps: f64,
    pub n: usize,
}

/// Coverage rule: each axis must span at least `factor` times the wider of
/// the pump sum-frequency intensity FWHM and the phasematching intensity
/// FWHM on that axis.
fn required_span(
    wg: &BirefringentWaveguide,
    pump: &PumpPulse,
    length_um: f64,
    arm_center_nm: f64,
    factor: f64,
) -> Result<f64, GridError> {
    // Pump |A|^2 FWHM in the sum frequency: sqrt(2) * intensity FWHM of the
    // field spectrum.
    let pump_fwhm = 2f64.sqrt() * bandwidth_rad_per_ps(pump.bandwidth_fwhm_nm, pump.center_nm);
    // Phasematching |phi|^2 FWHM along this axis at fixed partner frequency:
    // delta_k ~ tau * d_omega with tau the group-delay mismatch per length
    // between pump (slow) and this arm (fast).
    let ng_pump = wg.group_index(Axis::Slow, pump.center_nm)?;
    let ng_arm = wg.group_index(Axis::Fast, arm_center_nm)?;
    let tau_per_um = (ng_pump - ng_arm) / SPEED_OF_LIGHT_UM_PER_PS;
    let pm_fwhm = 2.0 * SINC_SQ_HALF_MAX_X * 2.0 / (tau_per_um.abs() * length_um);
    Ok(factor * pump_fwhm.max(pm_fwhm))
}

impl SpectralGrid {
    /// Grid centred on the phasematched pair, spans set by the coverage rule
    /// with the given factor (at least 6).
    pub fn auto(
        wg: &BirefringentWaveguide,
        pump: &PumpPulse,
        length_um: f64,
        n: usize,
        factor: f64,
    ) -> Result<Self, GridError> {
        if n < 16 {
            return Err(GridError::TooFewPoints(n));
        }
        let sol = solve_phasematch(wg, pump.center_nm, length_um)?;
        let signal_span = required_span(wg, pump, length_um, sol.signal_nm, factor)?;
        let idler_span = required_span(wg, pump, length_um, sol.idler_nm, factor)?;
        let grid = SpectralGrid {
            signal_center_rad_per_ps: angular_frequency_rad_per_ps(sol.signal_nm),
            idler_center_rad_per_ps: angular_frequency_rad_per_ps(sol.idler_nm),
            signal_span_rad_per_ps: signal_span,
            idler_span_rad_per_ps: idler_span,
            n,
        };
        grid.validate_coverage(wg, pump, length_um)?;
        Ok(grid)
    }

    /// Grid from explicit wavelength windows `(center_nm, full_span_nm)` per
    /// arm, validated against the coverage rule.
    pub fn from_wavelength_windows(
        wg: &BirefringentWaveguide,
        pump: &PumpPulse,
        length_um: f64,
        signal_window_nm: (f64, f64),
        idler_window_nm: (f64, f64),
        n: usize,
    ) -> Result<Self, GridError> {
        if n < 16 {
            return Err(GridError::TooFewPoints(n));
        }
        let span_omega = |center_nm: f64, span_nm: f64| {
            let lo = angular_frequency_rad_per_ps(center_nm + span_nm / 2.0);
            let hi = angular_frequency_rad_per_ps(center_nm - span_nm / 2.0);
            (0.5 * (lo + hi), hi - lo)
        };
        let (sc, ss) = span_omega(signal_window_nm.0, signal_window_nm.1);
        let (ic, is) = span_omega(idler_window_nm.0, idler_window_nm.1);
        let grid = SpectralGrid {
            signal_center_rad_per_ps: sc,
            idler_center_rad_per_ps: ic,
            signal_span_rad_per_ps: ss,
            idler_span_rad_per_ps: is,
            n,
        };
        grid.validate_coverage(wg, pump, length_um)?;
        Ok(grid)
    }

    /// Enforce the coverage rule (factor 6) on both axes.
    pub fn validate_coverage(
        &self,
        wg: &BirefringentWaveguide,
        pump: &PumpPulse,
        length_um: f64,
    ) -> Result<(), GridError> {
        let checks = [
            ("signal", self.signal_center_rad_per_ps, self.signal_span_rad_per_ps),
            ("idler", self.idler_center_rad_per_ps, self.idler_span_rad_per_ps),
        ];
        for (arm, center, span) in checks {
            let center_nm = wavelength_nm_from_angular_frequency(center);
            let required = required_span(wg, pump, length_um, center_nm, 6.0)?;
            if span < required * (1.0 - 1e-9) {
                return Err(GridError::CoverageTooSmall {
                    arm,
                    span_rad_per_ps: span,
                    required_rad_per_ps: required,
                });
            }
        }
        Ok(())
    }

    pub fn signal_omegas(&self) -> Vec<f64> {
        axis_points(self.signal_center_rad_per_ps, self.signal_span_rad_per_ps, self.n)
    }

    pub fn idler_omegas(&self) -> Vec<f64> {
        axis_points(self.idler_center_rad_per_ps, self.idler_span_rad_per_ps, self.n)
    }

    pub fn d_omega_signal(&self) -> f64 {
        self.signal_span_rad_per_ps / (self.n as f64 - 1.0)
    }

    pub fn d_omega_idler(&self) -> f64 {
        self.idler_span_rad_per_ps / (self.n as f64 - 1.0)
    }
}

fn axis_points(center: f64, span: f64, n: usize) -> Vec<f64> {
    let step = span / (n as f64 - 1.0);
    (0..n).map(|j| center - span / 2.0 + j as f64 * step).collect()
}

/// L2-normalized joint spectral amplitude on a [`SpectralGrid`].
/// `values[[i, j]]` belongs to `(signal_omegas[i], idler_omegas[j])`.
#[derive(Debug, Clone)]
pub struct JointAmplitude {
    pub grid: SpectralGrid,
    pub values: Array2<Complex64>,
}

impl JointAmplitude {
    /// Probability per grid cell (sums to 1).
    pub fn intensity(&self) -> Array2<f64> {
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        self.values.mapv(|v| v.norm_sqr() / total)
    }

    /// Marginal click-probability distribution of one arm (sums to 1).
    pub fn marginal(&self, arm: Arm) -> Vec<f64> {
        let p = self.intensity();
        let n = self.grid.n;
        let mut out = vec![0.0; n];
        match arm {
            Arm::Signal => {
                for i in 0..n {
                    out[i] = p.row(i).sum();
                }
            }
            Arm::Idler => {
                for j in 0..n {
                    out[j] = p.column(j).sum();
                }
            }
        }
        out
    }
}

/// Assemble the JSA for the given waveguide, pump, and birefringence
/// profile. The profile is materialized once for the whole grid; the linear
/// gradient uses the subdivision that converged at the grid center.
pub fn build_jsa(
    wg: &BirefringentWaveguide,
    pump: &PumpPulse,
    profile: &BirefringenceProfile,
    length_um: f64,
    grid: &SpectralGrid,
) -> Result<JointAmplitude, GridError> {
    grid.validate_coverage(wg, pump, length_um)?;
    let n_sub = phasematch::converged_subdivision(
        wg,
        profile,
        length_um,
        grid.signal_center_rad_per_ps,
        grid.idler_center_rad_per_ps,
    )?;
    let segments = profile.materialize(length_um, n_sub)?;
    let omegas_s = grid.signal_omegas();
    let omegas_i = grid.idler_omegas();
    let n = grid.n;
    let mut values = Array2::<Complex64>::zeros((n, n));
    for (i, &ws) in omegas_s.iter().enumerate() {
        for (j, &wi) in omegas_i.iter().enumerate() {
            let dk0 = phasematch::delta_k(wg, ws, wi).map_err(PhasematchError::from)?;
            let g = delta_k_birefringence_slope(ws, wi);
            let phi = phi_segments(dk0, g, &segments, length_um);
            let a = pump.sum_envelope(ws + wi);
            values[[i, j]] = phi * a;
        }
    }
    let norm: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>()
        * grid.d_omega_signal()
        * grid.d_omega_idler();
    let scale = 1.0 / norm.sqrt();
    values.mapv_inplace(|v| v * scale);
    Ok(JointAmplitude {
        grid: grid.clone(),
        values,
    })
}

/// Amplitude filter applied to one arm. Widths parameterize the intensity
/// transmission profile in wavelength.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpectralFilter {
    /// Unit transmission inside `width_nm` around `center_nm`, zero outside.
    TopHat { center_nm: f64, width_nm: f64 },
    /// Gaussian with intensity FWHM `fwhm_nm`.
    Gaussian { center_nm: f64, fwhm_nm: f64 },
}

impl SpectralFilter {
    /// Amplitude transmission at the given wavelength.
    pub fn amplitude(&self, wavelength_nm: f64) -> f64 {
        match *self {
            SpectralFilter::TopHat { center_nm, width_nm } => {
                if (wavelength_nm - center_nm).abs() <= width_nm / 2.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SpectralFilter::Gaussian { center_nm, fwhm_nm } => {
                let x = wavelength_nm - center_nm;
                (-2.0 * 2f64.ln() * x * x / (fwhm_nm * fwhm_nm)).exp()
            }
        }
    }
}

/// A filtered JSA together with the power transmission of the filter.
#[derive(Debug)]
pub struct FilteredAmplitude {
    pub jsa: JointAmplitude,
    /// Fraction of the unfiltered pair rate that survives the filter.
    pub transmission: f64,
}

/// Apply an amplitude filter to one arm, returning the renormalized JSA and
/// the pair-rate transmission (computed before renormalization).
pub fn apply_filter(
    jsa: &JointAmplitude,
    arm: Arm,
    filter: &SpectralFilter,
) -> Result<FilteredAmplitude, GridError> {
    let omegas = match arm {
        Arm::Signal => jsa.grid.signal_omegas(),
        Arm::Idler => jsa.grid.idler_omegas(),
    };
    let t: Vec<f64> = omegas
        .iter()
        .map(|&w| filter.amplitude(wavelength_nm_from_angular_frequency(w)))
        .collect();
    let mut values = jsa.values.clone();
    for ((i, j), v) in values.indexed_iter_mut() {
        let tij = match arm {
            Arm::Signal => t[i],
            Arm::Idler => t[j],
        };
        *v *= tij;
    }
    let before: f64 = jsa.values.iter().map(|v| v.norm_sqr()).sum();
    let after: f64 = values.iter().map(|v| v.norm_sqr()).sum();
    let transmission = after / before;
    if !(after > 0.0) {
        return Err(GridError::ZeroTransmission);
    }
    let d = jsa.grid.d_omega_signal() * jsa.grid.d_omega_idler();
    let scale = 1.0 / (after * d).sqrt();
    values.mapv_inplace(|v| v * scale);
    Ok(FilteredAmplitude {
        jsa: JointAmplitude {
            grid: jsa.grid.clone(),
            values,
        },
        transmission,
    })
}

/// Shape diagnostic for the central phasematching lobe: the normalized
/// frequency covariance of `|f|^2` restricted to `|delta_k L / 2| < pi`
/// (inside the first sinc zeros). Zero for an axis-aligned lobe; the
/// magnitude is reported relative to the geometric mean of the variances.
pub fn central_lobe_covariance_ratio(
    jsa: &JointAmplitude,
    wg: &BirefringentWaveguide,
    length_um: f64,
) -> Result<f64, GridError> {
    let omegas_s = jsa.grid.signal_omegas();
    let omegas_i = jsa.grid.idler_omegas();
    let mut w_sum = 0.0;
    let (mut ms, mut mi) = (0.0, 0.0);
    let mut moments = [0.0f64; 3]; // var_s, var_i, cov accumulators
    // Two passes: means, then central moments, over the masked weights.
    let mut weights = Vec::new();
    for (i, &ws) in omegas_s.iter().enumerate() {
        for (j, &wi) in omegas_i.iter().enumerate() {
            let dk = phasematch::delta_k(wg, ws, wi).map_err(PhasematchError::from)?;
            if (0.5 * dk * length_um).abs() < std::f64::consts::PI {
                let w = jsa.values[[i, j]].norm_sqr();
                weights.push((ws, wi, w));
                w_sum += w;
                ms += w * ws;
                mi += w * wi;
            }
        }
    }
    if w_sum <= 0.0 {
        return Err(GridError::ZeroTransmission);
    }
    ms /= w_sum;
    mi /= w_sum;
    for &(ws, wi, w) in &weights {
        moments[0] += w * (ws - ms) * (ws - ms);
        moments[1] += w * (wi - mi) * (wi - mi);
        moments[2] += w * (ws - ms) * (wi - mi);
    }
    Ok(moments[2] / (moments[0] * moments[1]).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn setup() -> (BirefringentWaveguide, PumpPulse, f64) {
        (
            BirefringentWaveguide::default_silica(),
            PumpPulse {
                center_nm: 729.0,
                bandwidth_fwhm_nm: 3.1,
            },
            40_000.0,
        )
    }

    #[test]
    fn envelope_closed_form_matches_quadrature() {
        let (_, pump, _) = setup();
        let w0 = 2.0 * pump.omega_center();
        let s = pump.sigma_rad_per_ps();
        for &x in &[0.0, 0.5, 1.0, 2.0, 3.5] {
            let omega_sum = w0 + x * s;
            let closed = pump.sum_envelope(omega_sum);
            let quad = pump.sum_envelope_quadrature(omega_sum, 2000);
            assert_relative_eq!(closed, quad, epsilon = 1e-9);
        }
    }

    #[test]
    fn auto_grid_satisfies_coverage_and_centers_on_solution() {
        let (wg, pump, l) = setup();
        let grid = SpectralGrid::auto(&wg, &pump, l, 64, 6.0).unwrap();
        assert!(grid.validate_coverage(&wg, &pump, l).is_ok());
        let center_nm = wavelength_nm_from_angular_frequency(grid.signal_center_rad_per_ps);
        assert_relative_eq!(center_nm, 676.12, epsilon = 0.05);
    }

    #[test]
    fn undersized_explicit_window_is_rejected() {
        let (wg, pump, l) = setup();
        let err = SpectralGrid::from_wavelength_windows(
            &wg,
            &pump,
            l,
            (676.12, 10.0),
            (790.86, 14.0),
            64,
        )
        .unwrap_err();
        assert!(matches!(err, GridError::CoverageTooSmall { .. }), "{err}");
    }

    #[test]
    fn jsa_is_normalized() {
        let (wg, pump, l) = setup();
        let grid = SpectralGrid::auto(&wg, &pump, l, 96, 6.0).unwrap();
        let jsa = build_jsa(&wg, &pump, &BirefringenceProfile::Uniform, l, &grid).unwrap();
        let total: f64 = jsa.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
            * grid.d_omega_signal()
            * grid.d_omega_idler();
        assert_relative_eq!(total, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn marginals_sum_to_one() {
        let (wg, pump, l) = setup();
        let grid = SpectralGrid::auto(&wg, &pump, l, 80, 6.0).unwrap();
        let jsa = build_jsa(&wg, &pump, &BirefringenceProfile::Uniform, l, &grid).unwrap();
        for arm in [Arm::Signal, Arm::Idler] {
            let m = jsa.marginal(arm);
            assert_relative_eq!(m.iter().sum::<f64>(), 1.0, max_relative = 1e-9);
            assert!(m.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn tophat_transmission_counts_inside_band() {
        let (wg, pump, l) = setup();
        let grid = SpectralGrid::auto(&wg, &pump, l, 128, 6.0).unwrap();
        let jsa = build_jsa(&wg, &pump, &BirefringenceProfile::Uniform, l, &grid).unwrap();
        let sol = solve_phasematch(&wg, pump.center_nm, l).unwrap();
        let filt = SpectralFilter::TopHat {
            center_nm: sol.signal_nm,
            width_nm: 4.5,
        };
        let out = apply_filter(&jsa, Arm::Signal, &filt).unwrap();
        assert!(out.transmission > 0.5 && out.transmission < 1.0);
        // Renormalized.
        let total: f64 = out.jsa.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
            * grid.d_omega_signal()
            * grid.d_omega_idler();
        assert_relative_eq!(total, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn filters_on_different_arms_commute() {
        let (wg, pump, l) = setup();
        let grid = SpectralGrid::auto(&wg, &pump, l, 64, 6.0).unwrap();
        let jsa = build_jsa(&wg, &pump, &BirefringenceProfile::Uniform, l, &grid).unwrap();
        let sol = solve_phasematch(&wg, pump.center_nm, l).unwrap();
        let fs = SpectralFilter::TopHat {
            center_nm: sol.signal_nm,
            width_nm: 5.0,
        };
        let fi = SpectralFilter::Gaussian {
            center_nm: sol.idler_nm,
            fwhm_nm: 6.0,
        };
        let a = apply_filter(&apply_filter(&jsa, Arm::Signal, &fs).unwrap().jsa, Arm::Idler, &fi)
            .unwrap();
        let b = apply_filter(&apply_filter(&jsa, Arm::Idler, &fi).unwrap().jsa, Arm::Signal, &fs)
            .unwrap();
        let max_diff = a
            .jsa
            .values
            .iter()
            .zip(b.jsa.values.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(max_diff < 1e-12, "filters should commute, diff {max_diff}");
    }

    #[test]
    fn zero_transmission_is_an_error() {
        let (wg, pump, l) = setup();
        let grid = SpectralGrid::auto(&wg, &pump, l, 64, 6.0).unwrap();
        let jsa = build_jsa(&wg, &pump, &BirefringenceProfile::Uniform, l, &grid).unwrap();
        let filt = SpectralFilter::TopHat {
            center_nm: 500.0,
            width_nm: 1.0,
        };
        assert!(matches!(
            apply_filter(&jsa, Arm::Signal, &filt),
            Err(GridError::ZeroTransmission)
        ));
    }
}
