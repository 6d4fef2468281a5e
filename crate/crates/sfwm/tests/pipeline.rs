//! Cross-module integration tests: each one drives two or more modules and
//! checks the result against an independent oracle from `common`.

mod common;

use approx::assert_relative_eq;
use ndarray::Array2;
use num_complex::Complex64;

use sfwm::counting::{analytic_estimates, DetectionTopology, NoiseModel, PairSource};
use sfwm::dispersion::BirefringentWaveguide;
use sfwm::jsa::{build_jsa, JointAmplitude, PumpPulse, SpectralGrid};
use sfwm::phasematch::{
    self, delta_k, delta_k_birefringence_slope, BirefringenceProfile,
};
use sfwm::schmidt;

fn reference_setup() -> (BirefringentWaveguide, PumpPulse, f64) {
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
fn random_profile_amplitude_matches_midpoint_quadrature() {
    let (wg, pump, length) = reference_setup();
    let profile = BirefringenceProfile::RandomSegments {
        delta_dn: 2e-6,
        segments: 57,
        seed: 9,
    };
    let grid = SpectralGrid::auto(&wg, &pump, length, 32, 6.0).unwrap();
    let segments = profile.materialize(length, 0).unwrap();
    for &(ws_off, wi_off) in &[(0.0, 0.0), (7.5, -3.0), (-12.0, 20.0)] {
        let ws = grid.signal_center_rad_per_ps + ws_off;
        let wi = grid.idler_center_rad_per_ps + wi_off;
        let dk0 = delta_k(&wg, ws, wi).unwrap();
        let g = delta_k_birefringence_slope(ws, wi);
        let pieces: Vec<(f64, f64, f64)> = segments
            .iter()
            .map(|s| (s.z0_um, s.z1_um, dk0 + g * s.offset))
            .collect();
        let oracle = common::phase_integral_midpoint(&pieces, length, 400_000);
        let lib = phasematch::phasematch_amplitude(&wg, &profile, length, ws, wi).unwrap();
        assert!(
            (lib - oracle).norm() < 2e-4,
            "amplitude {lib} vs midpoint oracle {oracle}"
        );
    }
}

#[test]
fn linear_profile_amplitude_matches_midpoint_quadrature() {
    let (wg, pump, length) = reference_setup();
    let profile = BirefringenceProfile::LinearGradient { delta_dn: 3e-6 };
    let grid = SpectralGrid::auto(&wg, &pump, length, 32, 6.0).unwrap();
    let ws = grid.signal_center_rad_per_ps + 4.0;
    let wi = grid.idler_center_rad_per_ps - 6.0;
    let dk0 = delta_k(&wg, ws, wi).unwrap();
    let g = delta_k_birefringence_slope(ws, wi);
    // Fine piecewise-constant rendering of the ramp for the oracle.
    let n_pieces = 20_000;
    let h = length / n_pieces as f64;
    let pieces: Vec<(f64, f64, f64)> = (0..n_pieces)
        .map(|j| {
            let z0 = j as f64 * h;
            let mid = z0 + 0.5 * h;
            (z0, z0 + h, dk0 + g * 3e-6 * (mid / length))
        })
        .collect();
    let oracle = common::phase_integral_midpoint(&pieces, length, 200_000);
    let lib = phasematch::phasematch_amplitude(&wg, &profile, length, ws, wi).unwrap();
    assert!(
        (lib - oracle).norm() < 2e-4,
        "amplitude {lib} vs midpoint oracle {oracle}"
    );
}

#[test]
fn jsa_factorizes_into_envelope_times_phase_amplitude() {
    let (wg, pump, length) = reference_setup();
    let grid = SpectralGrid::auto(&wg, &pump, length, 48, 6.0).unwrap();
    let jsa = build_jsa(&wg, &pump, &BirefringenceProfile::Uniform, length, &grid).unwrap();
    let omegas_s = grid.signal_omegas();
    let omegas_i = grid.idler_omegas();
    // The normalization is a single global constant: the ratio of the built
    // JSA to envelope * phi must not vary across the grid.
    let mut ratio: Option<f64> = None;
    for &(i, j) in &[(0usize, 5usize), (10, 40), (24, 24), (47, 3)] {
        let envelope = pump.sum_envelope(omegas_s[i] + omegas_i[j]);
        let phi = phasematch::phasematch_amplitude(
            &wg,
            &BirefringenceProfile::Uniform,
            length,
            omegas_s[i],
            omegas_i[j],
        )
        .unwrap();
        let expected = envelope * phi;
        let got = jsa.values[[i, j]];
        if expected.norm() < 1e-12 {
            assert!(got.norm() < 1e-9);
            continue;
        }
        let r = (got / expected).re;
        assert!((got / expected).im.abs() < 1e-9 * r.abs());
        match ratio {
            None => ratio = Some(r),
            Some(r0) => assert_relative_eq!(r, r0, max_relative = 1e-9),
        }
    }
}

#[test]
fn synthetic_gaussian_purity_matches_closed_form() {
    // Build a Gaussian joint amplitude directly on a dimensionless grid and
    // compare the decomposed purity with the closed form.
    let (a, b) = (1.0, 0.8);
    let n = 256;
    let span = 16.0;
    let grid = SpectralGrid {
        signal_center_rad_per_ps: 0.0,
        idler_center_rad_per_ps: 0.0,
        signal_span_rad_per_ps: span,
        idler_span_rad_per_ps: span,
        n,
    };
    let xs = grid.signal_omegas();
    let mut values = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (xs[i], xs[j]);
            values[[i, j]] =
                Complex64::new((-a * (x * x + y * y) + b * x * y).exp(), 0.0);
        }
    }
    let jsa = JointAmplitude { grid, values };
    let purity = schmidt::purity(&jsa).unwrap();
    let oracle = common::gaussian_purity_oracle(a, b);
    assert!(
        (purity - oracle).abs() < 1e-9,
        "SVD purity {purity} vs closed form {oracle}"
    );
}

#[test]
fn click_model_matches_independent_oracle_everywhere() {
    // Asymmetric losses, Raman on both arms, darks, multimode source.
    let source = PairSource {
        mode_means: vec![0.02, 0.008, 0.001],
    };
    let noise = NoiseModel {
        eta_signal_path: 0.7,
        eta_idler_path: 0.9,
        eta_det: 0.45,
        dark_click: 3e-5,
        raman_signal: 2e-4,
        raman_idler: 8e-4,
    };
    let eta_s = noise.eta_signal_path * noise.eta_det;
    let eta_i = noise.eta_idler_path * noise.eta_det;
    let mm = &source.mode_means;

    let cross = analytic_estimates(DetectionTopology::Cross, &source, &noise);
    let (p_s, p_i, p_si) = common::cross_clicks_oracle(
        mm,
        eta_s,
        eta_i,
        noise.raman_signal,
        noise.raman_idler,
        noise.dark_click,
    );
    assert_relative_eq!(cross.g2, p_si / (p_s * p_i), max_relative = 1e-12);
    assert_relative_eq!(
        cross.heralding_efficiency.unwrap(),
        p_si / p_s,
        max_relative = 1e-12
    );
    assert_relative_eq!(cross.p_first, p_s, max_relative = 1e-12);

    let auto = analytic_estimates(DetectionTopology::SignalAuto, &source, &noise);
    let (p_a, p_b, p_ab) = common::split_clicks_oracle(
        mm,
        eta_s,
        true,
        noise.raman_signal,
        noise.raman_idler,
        noise.dark_click,
    );
    assert_relative_eq!(auto.g2, p_ab / (p_a * p_b), max_relative = 1e-12);

    let heralded = analytic_estimates(DetectionTopology::HeraldedIdler, &source, &noise);
    let (p_h, p_ha, p_hab) = common::heralded_clicks_oracle(
        mm,
        eta_s,
        eta_i,
        noise.raman_signal,
        noise.raman_idler,
        noise.dark_click,
    );
    // The two splitter outputs are symmetric, so p_hb = p_ha. The triple
    // inclusion-exclusion cancels near-unity terms, so allow a slightly
    // wider relative tolerance than the two-detector cases.
    assert_relative_eq!(
        heralded.g2,
        p_hab * p_h / (p_ha * p_ha),
        max_relative = 1e-9
    );
    assert_relative_eq!(heralded.p_first, p_h, max_relative = 1e-12);
}

#[test]
fn schmidt_source_click_g2_tracks_marginal_prediction() {
    // Low gain: the click-level unheralded autocorrelation approaches the
    // photon-number prediction 1 + P from the Schmidt decomposition.
    let (wg, pump, length) = reference_setup();
    let grid = SpectralGrid::auto(&wg, &pump, length, 128, 6.0).unwrap();
    let jsa = build_jsa(&wg, &pump, &BirefringenceProfile::Uniform, length, &grid).unwrap();
    let decomposition = schmidt::decompose(&jsa).unwrap();
    let source = PairSource::from_schmidt_coefficients(1e-3, &decomposition.coefficients);
    let noise = NoiseModel {
        eta_signal_path: 0.8,
        eta_idler_path: 0.8,
        eta_det: 0.5,
        dark_click: 0.0,
        raman_signal: 0.0,
        raman_idler: 0.0,
    };
    let model = analytic_estimates(DetectionTopology::SignalAuto, &source, &noise);
    let predicted = decomposition.marginal_g2_prediction();
    assert!(
        (model.g2 - predicted).abs() < 5e-3,
        "click model g2 {} vs 1 + P = {}",
        model.g2,
        predicted
    );
}
