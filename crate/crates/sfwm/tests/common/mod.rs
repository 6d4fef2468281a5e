//! Independent oracles for integration tests: small, direct implementations
//! that share no code with the library's own algorithms.

#![allow(dead_code)]

use num_complex::Complex64;

/// P(no click) for a detector group that absorbs each signal photon with
/// probability `s_abs` and each idler photon with probability `i_abs`,
/// containing `n_dark` detectors with dark-click probability `dark`.
///
/// Thermal pairs per mode, Poisson noise photons, threshold detectors.
pub fn quiet_probability(
    mode_means: &[f64],
    s_abs: f64,
    i_abs: f64,
    raman_s: f64,
    raman_i: f64,
    n_dark: u32,
    dark: f64,
) -> f64 {
    let survive = (1.0 - s_abs) * (1.0 - i_abs);
    let pairs: f64 = mode_means
        .iter()
        .map(|&mu| 1.0 / (1.0 + mu * (1.0 - survive)))
        .product();
    pairs
        * (-raman_s * s_abs).exp()
        * (-raman_i * i_abs).exp()
        * (1.0 - dark).powi(n_dark as i32)
}

/// Hand-written click probabilities for the two-detector cross topology:
/// (P_signal, P_idler, P_coincidence).
pub fn cross_clicks_oracle(
    mode_means: &[f64],
    eta_s: f64,
    eta_i: f64,
    raman_s: f64,
    raman_i: f64,
    dark: f64,
) -> (f64, f64, f64) {
    let q = |s, i, n| quiet_probability(mode_means, s, i, raman_s, raman_i, n, dark);
    let p_s = 1.0 - q(eta_s, 0.0, 1);
    let p_i = 1.0 - q(0.0, eta_i, 1);
    let p_si = 1.0 - q(eta_s, 0.0, 1) - q(0.0, eta_i, 1) + q(eta_s, eta_i, 2);
    (p_s, p_i, p_si)
}

/// Split-arm (50:50) click probabilities: (P_a, P_b, P_ab). `eta` is the
/// whole-arm photon detection probability before the splitter.
pub fn split_clicks_oracle(
    mode_means: &[f64],
    eta: f64,
    arm_is_signal: bool,
    raman_s: f64,
    raman_i: f64,
    dark: f64,
) -> (f64, f64, f64) {
    let q = |abs: f64, n: u32| {
        if arm_is_signal {
            quiet_probability(mode_means, abs, 0.0, raman_s, raman_i, n, dark)
        } else {
            quiet_probability(mode_means, 0.0, abs, raman_s, raman_i, n, dark)
        }
    };
    let p_a = 1.0 - q(eta / 2.0, 1);
    let p_ab = 1.0 - 2.0 * q(eta / 2.0, 1) + q(eta, 2);
    (p_a, p_a, p_ab)
}

/// Heralded-split click probabilities: (P_h, P_ha, P_hab).
pub fn heralded_clicks_oracle(
    mode_means: &[f64],
    eta_s: f64,
    eta_i: f64,
    raman_s: f64,
    raman_i: f64,
    dark: f64,
) -> (f64, f64, f64) {
    let q = |s, i, n| quiet_probability(mode_means, s, i, raman_s, raman_i, n, dark);
    let p_h = 1.0 - q(eta_s, 0.0, 1);
    // P(h and a) by inclusion-exclusion over the complements.
    let p_ha = 1.0 - q(eta_s, 0.0, 1) - q(0.0, eta_i / 2.0, 1) + q(eta_s, eta_i / 2.0, 2);
    // Triple coincidence over the three complements.
    let p_hab = 1.0
        - q(eta_s, 0.0, 1)
        - 2.0 * q(0.0, eta_i / 2.0, 1)
        + 2.0 * q(eta_s, eta_i / 2.0, 2)
        + q(0.0, eta_i, 2)
        - q(eta_s, eta_i, 3);
    (p_h, p_ha, p_hab)
}

/// Closed-form heralded-state purity of the Gaussian amplitude
/// `f(x, y) = exp(-a (x^2 + y^2) + b x y)` for `0 < b < 2a`.
pub fn gaussian_purity_oracle(a: f64, b: f64) -> f64 {
    let t = b / (2.0 * a);
    let rho = (1.0 - (1.0 - t * t).sqrt()) / t;
    (1.0 - rho * rho) / (1.0 + rho * rho)
}

/// Plain midpoint quadrature of the longitudinal phase-matching integral
/// `(1/L) * integral_0^L exp(i k(z) z) dz` for a piecewise-constant local
/// mismatch `k(z)`, given as (z0, z1, k) pieces covering [0, L].
pub fn phase_integral_midpoint(pieces: &[(f64, f64, f64)], length: f64, n: usize) -> Complex64 {
    let h = length / n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for m in 0..n {
        let z = (m as f64 + 0.5) * h;
        let k = pieces
            .iter()
            .find(|&&(z0, z1, _)| z >= z0 && z < z1)
            .map(|&(_, _, k)| k)
            .unwrap_or_else(|| pieces.last().unwrap().2);
        sum += Complex64::from_polar(1.0, k * z);
    }
    sum * h / length
}

/// Simple ordinary-least-squares fit returning (slope, intercept, r_squared).
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    (slope, intercept, 1.0 - ss_res / ss_tot)
}
