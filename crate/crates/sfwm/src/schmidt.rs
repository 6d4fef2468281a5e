//! Schmidt decomposition of joint spectral amplitudes, spectral purity, and
//! correlation-function predictions.
//!
//! The decomposition writes `f(omega_s, omega_i) = sum_m c_m u_m(omega_s)
//! v_m(omega_i)` with orthonormal mode functions and `sum_m c_m^2 = 1`.
//! The heralded-state spectral purity is `P = sum_m c_m^4`, the Schmidt
//! number `K = 1/P`, and the unheralded marginal autocorrelation of either
//! arm is `g2 = 1 + P`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{JobSvd, SVDDC};
use num_complex::Complex64;
use thiserror::Error;

use crate::jsa::JointAmplitude;

#[derive(Debug, Error)]
pub enum SchmidtError {
    #[error("singular value decomposition failed: {0}")]
    Backend(String),
    #[error("decomposition input is empty")]
    EmptyInput,
    #[error("marginal g2 {g2} outside the physical range (1, 2] for purity inversion")]
    G2OutOfDomain { g2: f64 },
}

/// Schmidt modes and coefficients of a joint amplitude.
///
/// `coefficients` are descending and normalized over the *full* spectrum
/// (`sum c^2 = 1` before truncation); modes beyond the truncation threshold
/// are dropped from the mode matrices and their weight is recorded in
/// `truncated_weight`.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    /// Column m: signal mode m sampled on the grid, orthonormal under
    /// `sum |u|^2 d_omega = 1`.
    pub signal_modes: Array2<Complex64>,
    pub idler_modes: Array2<Complex64>,
    /// Total squared coefficient weight of the dropped tail.
    pub truncated_weight: f64,
    pub d_omega_signal: f64,
    pub d_omega_idler: f64,
}

impl SchmidtDecomposition {
    /// Heralded-state spectral purity `sum c^4 / (sum c^2)^2`.
    pub fn purity(&self) -> f64 {
        purity_from_coefficients(&self.coefficients)
    }

    /// Schmidt number `K = 1 / P`.
    pub fn schmidt_number(&self) -> f64 {
        1.0 / self.purity()
    }

    /// Predicted unheralded marginal autocorrelation `g2 = 1 + P`.
    pub fn marginal_g2_prediction(&self) -> f64 {
        1.0 + self.purity()
    }

    /// Reconstruct the joint amplitude from the kept modes.
    pub fn reconstruct(&self) -> Array2<Complex64> {
        let (ns, m) = self.signal_modes.dim();
        let ni = self.idler_modes.nrows();
        let mut out = Array2::<Complex64>::zeros((ns, ni));
        let scale = (self.d_omega_signal * self.d_omega_idler).sqrt();
        for k in 0..m {
            let c = self.coefficients[k] * scale;
            for i in 0..ns {
                let ui = self.signal_modes[[i, k]] * c;
                for j in 0..ni {
                    out[[i, j]] += ui * self.idler_modes[[j, k]];
                }
            }
        }
        out
    }
}

/// Purity from a (not necessarily normalized) coefficient list.
pub fn purity_from_coefficients(c: &[f64]) -> f64 {
    let s2: f64 = c.iter().map(|v| v * v).sum();
    let s4: f64 = c.iter().map(|v| v * v * v * v).sum();
    s4 / (s2 * s2)
}

/// Invert `g2 = 1 + P` for the purity; defined for `1 < g2 <= 2`.
pub fn purity_from_marginal_g2(g2: f64) -> Result<f64, SchmidtError> {
    if !(g2 > 1.0 && g2 <= 2.0) {
        return Err(SchmidtError::G2OutOfDomain { g2 });
    }
    Ok(g2 - 1.0)
}

fn weighted_matrix(jsa: &JointAmplitude) -> Array2<Complex64> {
    let w = (jsa.grid.d_omega_signal() * jsa.grid.d_omega_idler()).sqrt();
    jsa.values.mapv(|v| v * w)
}

/// Schmidt coefficients only (no mode functions); cheaper than a full
/// decomposition and sufficient for purity tracking.
pub fn schmidt_coefficients(jsa: &JointAmplitude) -> Result<Vec<f64>, SchmidtError> {
    let m = weighted_matrix(jsa);
    let (_, s, _) = m
        .svddc(JobSvd::None)
        .map_err(|e| SchmidtError::Backend(e.to_string()))?;
    Ok(s.to_vec())
}

/// Spectral purity of a joint amplitude.
pub fn purity(jsa: &JointAmplitude) -> Result<f64, SchmidtError> {
    Ok(purity_from_coefficients(&schmidt_coefficients(jsa)?))
}

/// Full decomposition with the default relative truncation `c_m / c_1 < 1e-6`.
pub fn decompose(jsa: &JointAmplitude) -> Result<SchmidtDecomposition, SchmidtError> {
    decompose_with_threshold(jsa, 1e-6)
}

/// Full decomposition keeping modes with `c_m / c_1 >= rel_threshold`
/// (`rel_threshold = 0` keeps everything).
pub fn decompose_with_threshold(
    jsa: &JointAmplitude,
    rel_threshold: f64,
) -> Result<SchmidtDecomposition, SchmidtError> {
    let m = weighted_matrix(jsa);
    if m.is_empty() {
        return Err(SchmidtError::EmptyInput);
    }
    let (u, s, vt) = m
        .svddc(JobSvd::Some)
        .map_err(|e| SchmidtError::Backend(e.to_string()))?;
    let u = u.ok_or_else(|| SchmidtError::Backend("missing left factor".into()))?;
    let vt = vt.ok_or_else(|| SchmidtError::Backend("missing right factor".into()))?;
    let s: Array1<f64> = s.mapv(|v| v);
    let c1 = s[0];
    let kept = s.iter().take_while(|&&v| v >= rel_threshold * c1).count().max(1);
    let truncated_weight: f64 = s.iter().skip(kept).map(|v| v * v).sum();

    let dws = jsa.grid.d_omega_signal();
    let dwi = jsa.grid.d_omega_idler();
    let mut signal_modes = Array2::<Complex64>::zeros((u.nrows(), kept));
    let mut idler_modes = Array2::<Complex64>::zeros((vt.ncols(), kept));
    for k in 0..kept {
        // Deterministic phase convention: make the largest-magnitude sample
        // of each signal mode real and positive, rotating the idler mode to
        // compensate.
        let col = u.column(k);
        let mut best = 0usize;
        let mut best_mag = 0.0;
        for (i, v) in col.iter().enumerate() {
            let mag = v.norm();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        let phase = col[best] / col[best].norm();
        let fix_u = phase.conj();
        let fix_v = phase;
        for i in 0..u.nrows() {
            signal_modes[[i, k]] = u[[i, k]] * fix_u / dws.sqrt();
        }
        for j in 0..vt.ncols() {
            idler_modes[[j, k]] = vt[[k, j]] * fix_v / dwi.sqrt();
        }
    }
    Ok(SchmidtDecomposition {
        coefficients: s.iter().take(kept).copied().collect(),
        signal_modes,
        idler_modes,
        truncated_weight,
        d_omega_signal: dws,
        d_omega_idler: dwi,
    })
}

/// Cauchy-Schwarz test on measured correlation functions: the classical
/// bound requires `g_si^2 <= g_ss * g_ii`. Reports the violation
/// `V = g_si^2 - g_ss g_ii`, its propagated standard error, and the
/// significance `V / sigma_V`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CauchySchwarzReport {
    pub violation: f64,
    pub sigma: f64,
    pub significance: f64,
}

pub fn cauchy_schwarz_violation(
    g_si: (f64, f64),
    g_ss: (f64, f64),
    g_ii: (f64, f64),
) -> CauchySchwarzReport {
    let violation = g_si.0 * g_si.0 - g_ss.0 * g_ii.0;
    let sigma = ((2.0 * g_si.0 * g_si.1).powi(2)
        + (g_ii.0 * g_ss.1).powi(2)
        + (g_ss.0 * g_ii.1).powi(2))
    .sqrt();
    CauchySchwarzReport {
        violation,
        sigma,
        significance: violation / sigma,
    }
}
