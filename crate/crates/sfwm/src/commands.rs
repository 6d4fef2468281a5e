//! The five CLI commands, as library functions that read a [`RunConfig`]
//! and write deterministic CSV/JSON outputs into a directory.

use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use crate::config::{FilterShape, RunConfig, SourceSpec};
use crate::counting::{
    self, analytic_estimates, run_experiment, DetectionTopology, Estimate, ExperimentSpec,
    NoiseModel, PairSource,
};
use crate::dispersion::{BirefringentWaveguide, Sellmeier};
use crate::jsa::{
    apply_filter, build_jsa, central_lobe_covariance_ratio, Arm, PumpPulse, SpectralFilter,
    SpectralGrid,
};
use crate::output::{fmt_float, write_json, CsvTable, WrittenFiles};
use crate::phasematch::{solve_phasematch, BirefringenceProfile};
use crate::schmidt;
use crate::units::wavelength_nm_from_angular_frequency;
use crate::SfwmError;

fn waveguide(cfg: &RunConfig) -> BirefringentWaveguide {
    BirefringentWaveguide {
        sellmeier: Sellmeier::fused_silica(),
        delta_n0: cfg.dispersion.delta_n0,
    }
}

fn pump(cfg: &RunConfig) -> PumpPulse {
    PumpPulse {
        center_nm: cfg.pump.center_nm,
        bandwidth_fwhm_nm: cfg.pump.bandwidth_fwhm_nm,
    }
}

/// Build the spectral grid from the config: explicit windows if both are
/// given, otherwise centered automatically on the phase-matched pair.
fn make_grid(
    cfg: &RunConfig,
    wg: &BirefringentWaveguide,
    pump: &PumpPulse,
    n: usize,
) -> Result<SpectralGrid, SfwmError> {
    let length = cfg.geometry.length_um;
    let grid = match (cfg.grid.signal_window_nm, cfg.grid.idler_window_nm) {
        (Some(s), Some(i)) => SpectralGrid::from_wavelength_windows(wg, pump, length, s, i, n)?,
        _ => SpectralGrid::auto(wg, pump, length, n, cfg.grid.span_factor)?,
    };
    Ok(grid)
}

fn topology_name(t: DetectionTopology) -> &'static str {
    match t {
        DetectionTopology::Cross => "cross",
        DetectionTopology::SignalAuto => "signal-auto",
        DetectionTopology::IdlerAuto => "idler-auto",
        DetectionTopology::HeraldedIdler => "heralded-idler",
    }
}

/// Phase-matched signal/idler pair as a function of pump wavelength.
pub fn cmd_phasematch_curve(cfg: &RunConfig, out_dir: &Path) -> Result<WrittenFiles, SfwmError> {
    let wg = waveguide(cfg);
    let length = cfg.geometry.length_um;
    let sweep = &cfg.phasematch_curve;
    let steps = ((sweep.pump_max_nm - sweep.pump_min_nm) / sweep.step_nm).round() as usize;
    let mut table = CsvTable::new(["pump_nm", "signal_nm", "idler_nm", "residual_dk_l"]);
    for k in 0..=steps {
        let pump_nm = sweep.pump_min_nm + k as f64 * sweep.step_nm;
        let sol = solve_phasematch(&wg, pump_nm, length)?;
        table.push_row(vec![
            fmt_float(pump_nm),
            fmt_float(sol.signal_nm),
            fmt_float(sol.idler_nm),
            fmt_float(sol.residual),
        ]);
    }
    let center = solve_phasematch(&wg, cfg.pump.center_nm, length)?;
    let report = json!({
        "delta_n0": cfg.dispersion.delta_n0,
        "length_um": length,
        "pump_center_nm": cfg.pump.center_nm,
        "signal_nm": center.signal_nm,
        "idler_nm": center.idler_nm,
        "residual_dk_l": center.residual,
    });
    let mut files = WrittenFiles::default();
    let csv_path = out_dir.join("pm_curve.csv");
    table.write(&csv_path)?;
    files.add(csv_path);
    let report_path = out_dir.join("pm_report.json");
    write_json(&report_path, &report)?;
    files.add(report_path);
    Ok(files)
}

/// Joint spectral amplitude, its Schmidt decomposition, and (optionally) the
/// effect of a spectral filter on one arm.
pub fn cmd_jsa(cfg: &RunConfig, out_dir: &Path) -> Result<WrittenFiles, SfwmError> {
    let wg = waveguide(cfg);
    let pump = pump(cfg);
    let length = cfg.geometry.length_um;
    let grid = make_grid(cfg, &wg, &pump, cfg.grid.n)?;
    let jsa = build_jsa(&wg, &pump, &cfg.profile, length, &grid)?;
    let decomposition = schmidt::decompose(&jsa)?;
    let covariance = central_lobe_covariance_ratio(&jsa, &wg, length)?;
    let solution = solve_phasematch(&wg, cfg.pump.center_nm, length)?;

    let mut files = WrittenFiles::default();

    let omegas_s = grid.signal_omegas();
    let omegas_i = grid.idler_omegas();
    let intensity = jsa.intensity();
    let mut intensity_table = CsvTable::new(["signal_nm", "idler_nm", "intensity"]);
    for (i, &ws) in omegas_s.iter().enumerate() {
        for (j, &wi) in omegas_i.iter().enumerate() {
            intensity_table.push_row(vec![
                fmt_float(wavelength_nm_from_angular_frequency(ws)),
                fmt_float(wavelength_nm_from_angular_frequency(wi)),
                fmt_float(intensity[[i, j]]),
            ]);
        }
    }
    let path = out_dir.join("jsa_intensity.csv");
    intensity_table.write(&path)?;
    files.add(path);

    let marg_s = jsa.marginal(Arm::Signal);
    let marg_i = jsa.marginal(Arm::Idler);
    let mut marginal_table = CsvTable::new([
        "signal_nm",
        "signal_probability",
        "idler_nm",
        "idler_probability",
    ]);
    for k in 0..grid.n {
        marginal_table.push_row(vec![
            fmt_float(wavelength_nm_from_angular_frequency(omegas_s[k])),
            fmt_float(marg_s[k]),
            fmt_float(wavelength_nm_from_angular_frequency(omegas_i[k])),
            fmt_float(marg_i[k]),
        ]);
    }
    let path = out_dir.join("jsa_marginals.csv");
    marginal_table.write(&path)?;
    files.add(path);

    let coefficients: Vec<f64> = decomposition.coefficients.iter().copied().take(64).collect();
    let schmidt_json = json!({
        "coefficients": coefficients,
        "purity": decomposition.purity(),
        "schmidt_number": decomposition.schmidt_number(),
        "marginal_g2_prediction": decomposition.marginal_g2_prediction(),
        "truncated_weight": decomposition.truncated_weight,
    });
    let path = out_dir.join("jsa_schmidt.json");
    write_json(&path, &schmidt_json)?;
    files.add(path);

    let filter_json = match &cfg.filter {
        None => serde_json::Value::Null,
        Some(fc) => {
            let center_nm = fc.center_nm.unwrap_or(match fc.arm {
                Arm::Signal => solution.signal_nm,
                Arm::Idler => solution.idler_nm,
            });
            let filter = match fc.shape {
                FilterShape::Tophat { width_nm } => SpectralFilter::TopHat {
                    center_nm,
                    width_nm,
                },
                FilterShape::Gaussian { fwhm_nm } => SpectralFilter::Gaussian {
                    center_nm,
                    fwhm_nm,
                },
            };
            let filtered = apply_filter(&jsa, fc.arm, &filter)?;
            let filtered_decomposition = schmidt::decompose(&filtered.jsa)?;
            // A filter on the heralding (signal) arm discards heralds but
            // every surviving herald still announces an unfiltered idler
            // photon, so the preparation efficiency is untouched. A filter
            // on the idler arm removes prepared photons directly.
            let preparation_factor = match fc.arm {
                Arm::Signal => 1.0,
                Arm::Idler => filtered.transmission,
            };
            json!({
                "arm": match fc.arm { Arm::Signal => "signal", Arm::Idler => "idler" },
                "center_nm": center_nm,
                "transmission": filtered.transmission,
                "purity_filtered": filtered_decomposition.purity(),
                "marginal_g2_prediction_filtered": filtered_decomposition.marginal_g2_prediction(),
                "preparation_efficiency_factor": preparation_factor,
            })
        }
    };

    let report = json!({
        "pump_center_nm": cfg.pump.center_nm,
        "pump_bandwidth_fwhm_nm": cfg.pump.bandwidth_fwhm_nm,
        "length_um": length,
        "signal_center_nm": wavelength_nm_from_angular_frequency(grid.signal_center_rad_per_ps),
        "idler_center_nm": wavelength_nm_from_angular_frequency(grid.idler_center_rad_per_ps),
        "signal_span_rad_per_ps": grid.signal_span_rad_per_ps,
        "idler_span_rad_per_ps": grid.idler_span_rad_per_ps,
        "grid_n": grid.n,
        "purity": decomposition.purity(),
        "schmidt_number": decomposition.schmidt_number(),
        "marginal_g2_prediction": decomposition.marginal_g2_prediction(),
        "central_lobe_covariance_ratio": covariance,
        "filter": filter_json,
    });
    let path = out_dir.join("jsa_report.json");
    write_json(&path, &report)?;
    files.add(path);
    Ok(files)
}

/// Purity and marginal-g2 prediction versus pump bandwidth.
pub fn cmd_sweep_pump_bandwidth(cfg: &RunConfig, out_dir: &Path) -> Result<WrittenFiles, SfwmError> {
    let wg = waveguide(cfg);
    let length = cfg.geometry.length_um;
    let sweep = &cfg.pump_sweep;
    let steps = ((sweep.max_nm - sweep.min_nm) / sweep.step_nm).round() as usize;
    let bandwidths: Vec<f64> = (0..=steps)
        .map(|k| sweep.min_nm + k as f64 * sweep.step_nm)
        .collect();
    // Each bandwidth is an independent pure computation; evaluate in
    // parallel and keep the output order fixed.
    let rows: Result<Vec<_>, SfwmError> = bandwidths
        .par_iter()
        .map(|&bw| {
            let pump = PumpPulse {
                center_nm: cfg.pump.center_nm,
                bandwidth_fwhm_nm: bw,
            };
            let grid = SpectralGrid::auto(&wg, &pump, length, sweep.n, cfg.grid.span_factor)?;
            let jsa = build_jsa(&wg, &pump, &cfg.profile, length, &grid)?;
            let purity = schmidt::purity(&jsa)?;
            let covariance = central_lobe_covariance_ratio(&jsa, &wg, length)?;
            Ok((bw, purity, covariance))
        })
        .collect();
    let rows = rows?;

    let mut table = CsvTable::new([
        "pump_bandwidth_fwhm_nm",
        "purity",
        "schmidt_number",
        "marginal_g2_prediction",
        "central_lobe_covariance_ratio",
    ]);
    for &(bw, purity, covariance) in &rows {
        table.push_row(vec![
            fmt_float(bw),
            fmt_float(purity),
            fmt_float(1.0 / purity),
            fmt_float(1.0 + purity),
            fmt_float(covariance),
        ]);
    }

    let best = rows
        .iter()
        .cloned()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("sweep has at least one point");
    let report = json!({
        "pump_center_nm": cfg.pump.center_nm,
        "grid_n": sweep.n,
        "bandwidth_min_nm": sweep.min_nm,
        "bandwidth_max_nm": sweep.max_nm,
        "bandwidth_step_nm": sweep.step_nm,
        "best_bandwidth_nm": best.0,
        "best_purity": best.1,
        "best_marginal_g2_prediction": 1.0 + best.1,
        "covariance_ratio_at_best": best.2,
    });

    let mut files = WrittenFiles::default();
    let path = out_dir.join("pump_sweep.csv");
    table.write(&path)?;
    files.add(path);
    let path = out_dir.join("pump_sweep_report.json");
    write_json(&path, &report)?;
    files.add(path);
    Ok(files)
}

/// Purity under birefringence inhomogeneity: a linear gradient and a
/// random-segment ensemble, swept over the deviation scale.
pub fn cmd_sweep_inhomogeneity(cfg: &RunConfig, out_dir: &Path) -> Result<WrittenFiles, SfwmError> {
    let wg = waveguide(cfg);
    let pump = pump(cfg);
    let length = cfg.geometry.length_um;
    let sweep = &cfg.inhomogeneity_sweep;
    let grid = make_grid(cfg, &wg, &pump, cfg.grid.n)?;

    let purity_of = |profile: &BirefringenceProfile| -> Result<f64, SfwmError> {
        let jsa = build_jsa(&wg, &pump, profile, length, &grid)?;
        Ok(schmidt::purity(&jsa)?)
    };

    let baseline = purity_of(&BirefringenceProfile::Uniform)?;

    let linear: Result<Vec<_>, SfwmError> = sweep
        .linear_delta_dn
        .par_iter()
        .map(|&d| Ok((d, purity_of(&BirefringenceProfile::LinearGradient { delta_dn: d })?)))
        .collect();
    let linear = linear?;

    let random_tasks: Vec<(f64, u64)> = sweep
        .random_delta_dn
        .iter()
        .flat_map(|&d| (0..sweep.seeds).map(move |k| (d, sweep.seed_base + k)))
        .collect();
    let random_samples: Result<Vec<_>, SfwmError> = random_tasks
        .par_iter()
        .map(|&(d, seed)| {
            let profile = BirefringenceProfile::RandomSegments {
                delta_dn: d,
                segments: sweep.segments,
                seed,
            };
            Ok((d, seed, purity_of(&profile)?))
        })
        .collect();
    let random_samples = random_samples?;

    let mut seeds_table = CsvTable::new(["delta_dn", "seed", "purity"]);
    for &(d, seed, p) in &random_samples {
        seeds_table.push_row(vec![fmt_float(d), seed.to_string(), fmt_float(p)]);
    }

    // Aggregate the ensemble per deviation scale, preserving sweep order.
    struct RandomRow {
        delta_dn: f64,
        mean: f64,
        sem: f64,
        min: f64,
        max: f64,
    }
    let mut random_rows = Vec::new();
    for &d in &sweep.random_delta_dn {
        let values: Vec<f64> = random_samples
            .iter()
            .filter(|&&(dd, _, _)| dd == d)
            .map(|&(_, _, p)| p)
            .collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        random_rows.push(RandomRow {
            delta_dn: d,
            mean,
            sem: (var / n).sqrt(),
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        });
    }

    let mut table = CsvTable::new([
        "profile",
        "delta_dn",
        "purity_mean",
        "purity_sem",
        "purity_min",
        "purity_max",
        "n_samples",
    ]);
    table.push_row(vec![
        "uniform".into(),
        fmt_float(0.0),
        fmt_float(baseline),
        fmt_float(0.0),
        fmt_float(baseline),
        fmt_float(baseline),
        "1".into(),
    ]);
    for &(d, p) in &linear {
        table.push_row(vec![
            "linear".into(),
            fmt_float(d),
            fmt_float(p),
            fmt_float(0.0),
            fmt_float(p),
            fmt_float(p),
            "1".into(),
        ]);
    }
    for row in &random_rows {
        table.push_row(vec![
            "random".into(),
            fmt_float(row.delta_dn),
            fmt_float(row.mean),
            fmt_float(row.sem),
            fmt_float(row.min),
            fmt_float(row.max),
            sweep.seeds.to_string(),
        ]);
    }

    // Where each family first drops below the purity floor.
    let first_linear_exit = linear
        .iter()
        .find(|&&(_, p)| p < sweep.purity_floor)
        .map(|&(d, _)| d);
    let first_random_exit = random_rows
        .iter()
        .find(|r| r.mean < sweep.purity_floor)
        .map(|r| r.delta_dn);

    let reference = sweep.enhancement_reference_delta_dn;
    let enhancement = random_rows
        .iter()
        .find(|r| (r.delta_dn - reference).abs() <= 1e-12 + 1e-6 * reference)
        .map(|r| {
            json!({
                "delta_dn": r.delta_dn,
                "value": r.mean - baseline,
                "sem": r.sem,
                "z_score": (r.mean - baseline) / r.sem,
            })
        })
        .unwrap_or(serde_json::Value::Null);

    let linear_monotone = linear.windows(2).all(|w| w[1].1 < w[0].1);
    let report = json!({
        "baseline_purity": baseline,
        "grid_n": grid.n,
        "segments": sweep.segments,
        "seeds": sweep.seeds,
        "purity_floor": sweep.purity_floor,
        "enhancement_at_reference": enhancement,
        "first_linear_exit_delta_dn": first_linear_exit,
        "first_random_exit_delta_dn": first_random_exit,
        "linear_purity_strictly_decreasing": linear_monotone,
    });

    let mut files = WrittenFiles::default();
    let path = out_dir.join("inhomogeneity_sweep.csv");
    table.write(&path)?;
    files.add(path);
    let path = out_dir.join("inhomogeneity_seeds.csv");
    seeds_table.write(&path)?;
    files.add(path);
    let path = out_dir.join("inhomogeneity_report.json");
    write_json(&path, &report)?;
    files.add(path);
    Ok(files)
}

fn estimate_json(e: Result<Estimate, counting::CountingError>) -> serde_json::Value {
    match e {
        Ok(est) => json!({"value": est.value, "std_err": est.std_err}),
        Err(_) => serde_json::Value::Null,
    }
}

/// Monte Carlo click counting: either one experiment per configured
/// topology at a fixed gain, or a pump-power sweep.
pub fn cmd_count_sim(cfg: &RunConfig, out_dir: &Path) -> Result<WrittenFiles, SfwmError> {
    match &cfg.counting.power_sweep {
        None => count_sim_single(cfg, out_dir),
        Some(_) => count_sim_power_sweep(cfg, out_dir),
    }
}

fn make_source(cfg: &RunConfig) -> Result<PairSource, SfwmError> {
    match cfg.counting.source {
        SourceSpec::SingleMode => Ok(PairSource::single_mode(cfg.counting.mu)),
        SourceSpec::Schmidt => {
            let wg = waveguide(cfg);
            let pump = pump(cfg);
            let grid = make_grid(cfg, &wg, &pump, cfg.grid.n)?;
            let jsa = build_jsa(&wg, &pump, &cfg.profile, cfg.geometry.length_um, &grid)?;
            let decomposition = schmidt::decompose(&jsa)?;
            Ok(PairSource::from_schmidt_coefficients(
                cfg.counting.mu,
                &decomposition.coefficients,
            ))
        }
    }
}

fn count_sim_single(cfg: &RunConfig, out_dir: &Path) -> Result<WrittenFiles, SfwmError> {
    let source = make_source(cfg)?;
    let noise = cfg.counting.noise.clone();

    let mut counts = CsvTable::new([
        "topology",
        "pulses",
        "signal",
        "idler",
        "coincidence",
        "split_a",
        "split_b",
        "split_ab",
        "herald_split_a",
        "herald_split_b",
        "herald_split_ab",
    ]);
    let mut per_topology = serde_json::Map::new();
    let mut cross_g2: Option<Estimate> = None;
    let mut auto_g2: [Option<Estimate>; 2] = [None, None];

    for (idx, &topology) in cfg.counting.topologies.iter().enumerate() {
        let spec = ExperimentSpec {
            topology,
            source: source.clone(),
            noise: noise.clone(),
            pulses: cfg.counting.n_pulses,
            seed: cfg.counting.seed,
            run: idx as u32,
        };
        let t = run_experiment(&spec)?;
        counts.push_row(vec![
            topology_name(topology).into(),
            t.pulses.to_string(),
            t.signal.to_string(),
            t.idler.to_string(),
            t.coincidence.to_string(),
            t.split_a.to_string(),
            t.split_b.to_string(),
            t.split_ab.to_string(),
            t.herald_split_a.to_string(),
            t.herald_split_b.to_string(),
            t.herald_split_ab.to_string(),
        ]);
        let model = analytic_estimates(topology, &source, &noise);
        let mut entry = serde_json::Map::new();
        entry.insert("g2_model".into(), json!(model.g2));
        match topology {
            DetectionTopology::Cross => {
                let g = counting::g2_cross(topology, &t);
                if let Ok(est) = g {
                    cross_g2 = Some(est);
                }
                entry.insert("g2_mc".into(), estimate_json(g));
                entry.insert(
                    "heralding_efficiency_mc".into(),
                    estimate_json(counting::heralding_efficiency(topology, &t)),
                );
                entry.insert(
                    "heralding_efficiency_model".into(),
                    json!(model.heralding_efficiency),
                );
                match counting::preparation_efficiency(topology, &t, noise.eta_det) {
                    Ok(p) => {
                        entry.insert(
                            "preparation_efficiency_mc".into(),
                            json!({
                                "value": p.value,
                                "std_err": p.std_err,
                                "exceeds_unity": p.exceeds_unity,
                            }),
                        );
                    }
                    Err(_) => {
                        entry.insert("preparation_efficiency_mc".into(), serde_json::Value::Null);
                    }
                }
            }
            DetectionTopology::SignalAuto | DetectionTopology::IdlerAuto => {
                let g = counting::g2_auto(topology, &t);
                if let Ok(est) = g {
                    let slot = (topology == DetectionTopology::IdlerAuto) as usize;
                    auto_g2[slot] = Some(est);
                }
                entry.insert("g2_mc".into(), estimate_json(g));
            }
            DetectionTopology::HeraldedIdler => {
                entry.insert(
                    "g2_mc".into(),
                    estimate_json(counting::g2_heralded(topology, &t)),
                );
            }
        }
        per_topology.insert(topology_name(topology).into(), entry.into());
    }

    // Cauchy-Schwarz test from the three measured correlations.
    let cauchy_schwarz = match (cross_g2, auto_g2[0], auto_g2[1]) {
        (Some(si), Some(ss), Some(ii)) => {
            let r = schmidt::cauchy_schwarz_violation(
                (si.value, si.std_err),
                (ss.value, ss.std_err),
                (ii.value, ii.std_err),
            );
            json!({
                "violation": r.violation,
                "sigma": r.sigma,
                "significance": r.significance,
            })
        }
        _ => serde_json::Value::Null,
    };

    let report = json!({
        "mode": "single",
        "mu": cfg.counting.mu,
        "mean_pairs_per_pulse": source.mean_pairs(),
        "n_modes": source.mode_means.len(),
        "n_pulses": cfg.counting.n_pulses,
        "seed": cfg.counting.seed,
        "noise": cfg.counting.noise,
        "topologies": per_topology,
        "cauchy_schwarz": cauchy_schwarz,
    });

    let mut files = WrittenFiles::default();
    let path = out_dir.join("counts.csv");
    counts.write(&path)?;
    files.add(path);
    let path = out_dir.join("counting_report.json");
    write_json(&path, &report)?;
    files.add(path);
    Ok(files)
}

fn count_sim_power_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<WrittenFiles, SfwmError> {
    let sweep = cfg.counting.power_sweep.as_ref().expect("checked by caller");
    let steps = ((sweep.max_mw - sweep.min_mw) / sweep.step_mw).round() as usize;
    let powers: Vec<f64> = (0..=steps)
        .map(|k| sweep.min_mw + k as f64 * sweep.step_mw)
        .collect();

    let noise_at = |p_mw: f64| -> NoiseModel {
        let mut n = cfg.counting.noise.clone();
        n.raman_signal = sweep.raman_signal_per_mw * p_mw;
        n.raman_idler = sweep.raman_idler_per_mw * p_mw;
        n
    };
    // Pair generation is quadratic in pump power, Raman linear.
    let mu_at = |p_mw: f64| sweep.mu_at_100mw * (p_mw / 100.0).powi(2);

    let mut table = CsvTable::new([
        "power_mw",
        "mu",
        "raman_idler",
        "pulses",
        "n_signal",
        "n_idler",
        "n_coincidence",
        "g2_si_mc",
        "g2_si_mc_se",
        "g2_si_model",
        "eta_heralding_mc",
        "eta_heralding_mc_se",
        "eta_heralding_model",
        "n_herald",
        "n_herald_split_ab",
        "g2_heralded_mc",
        "g2_heralded_mc_se",
        "g2_heralded_model",
    ]);

    let mut model_curve = Vec::new(); // (power, model g2_heralded)
    let mut mc_points_checked = 0usize;
    let mut mc_model_consistent = true;

    for (k, &p_mw) in powers.iter().enumerate() {
        let source = PairSource::single_mode(mu_at(p_mw));
        let noise = noise_at(p_mw);
        let cross_spec = ExperimentSpec {
            topology: DetectionTopology::Cross,
            source: source.clone(),
            noise: noise.clone(),
            pulses: cfg.counting.n_pulses,
            seed: cfg.counting.seed,
            run: (2 * k) as u32,
        };
        let heralded_spec = ExperimentSpec {
            topology: DetectionTopology::HeraldedIdler,
            run: (2 * k + 1) as u32,
            ..cross_spec.clone()
        };
        let tc = run_experiment(&cross_spec)?;
        let th = run_experiment(&heralded_spec)?;

        let cross_model = analytic_estimates(DetectionTopology::Cross, &source, &noise);
        let heralded_model = analytic_estimates(DetectionTopology::HeraldedIdler, &source, &noise);
        model_curve.push((p_mw, heralded_model.g2));

        let g_si = counting::g2_cross(DetectionTopology::Cross, &tc).ok();
        let eta_h = counting::heralding_efficiency(DetectionTopology::Cross, &tc).ok();
        let g_h = counting::g2_heralded(DetectionTopology::HeraldedIdler, &th).ok();

        for (mc, model) in [
            (g_si, cross_model.g2),
            (eta_h, cross_model.heralding_efficiency.unwrap_or(f64::NAN)),
            (g_h, heralded_model.g2),
        ] {
            if let Some(est) = mc {
                mc_points_checked += 1;
                if (est.value - model).abs() > 3.0 * est.std_err {
                    mc_model_consistent = false;
                }
            }
        }

        let opt = |e: Option<Estimate>, f: fn(Estimate) -> f64| {
            e.map(|v| fmt_float(f(v))).unwrap_or_default()
        };
        table.push_row(vec![
            fmt_float(p_mw),
            fmt_float(mu_at(p_mw)),
            fmt_float(noise.raman_idler),
            tc.pulses.to_string(),
            tc.signal.to_string(),
            tc.idler.to_string(),
            tc.coincidence.to_string(),
            opt(g_si, |e| e.value),
            opt(g_si, |e| e.std_err),
            fmt_float(cross_model.g2),
            opt(eta_h, |e| e.value),
            opt(eta_h, |e| e.std_err),
            fmt_float(cross_model.heralding_efficiency.unwrap_or(f64::NAN)),
            th.signal.to_string(),
            th.herald_split_ab.to_string(),
            opt(g_h, |e| e.value),
            opt(g_h, |e| e.std_err),
            fmt_float(heralded_model.g2),
        ]);
    }

    // Straight-line fit of the model heralded g2 against power.
    let n = model_curve.len() as f64;
    let mean_x = model_curve.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let mean_y = model_curve.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = model_curve.iter().map(|&(x, _)| (x - mean_x).powi(2)).sum();
    let sxy: f64 = model_curve
        .iter()
        .map(|&(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = model_curve.iter().map(|&(_, y)| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = model_curve
        .iter()
        .map(|&(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let r_squared = 1.0 - ss_res / ss_tot;

    let report_model = analytic_estimates(
        DetectionTopology::HeraldedIdler,
        &PairSource::single_mode(mu_at(sweep.report_power_mw)),
        &noise_at(sweep.report_power_mw),
    );

    let report = json!({
        "mode": "power-sweep",
        "power_min_mw": sweep.min_mw,
        "power_max_mw": sweep.max_mw,
        "power_step_mw": sweep.step_mw,
        "mu_at_100mw": sweep.mu_at_100mw,
        "raman_idler_per_mw": sweep.raman_idler_per_mw,
        "raman_signal_per_mw": sweep.raman_signal_per_mw,
        "n_pulses": cfg.counting.n_pulses,
        "seed": cfg.counting.seed,
        "model_fit": {
            "slope_per_mw": slope,
            "intercept": intercept,
            "r_squared": r_squared,
        },
        "report_power_mw": sweep.report_power_mw,
        "g2_heralded_model_at_report_power": report_model.g2,
        "mc_points_checked": mc_points_checked,
        "mc_model_consistent_3se": mc_model_consistent,
    });

    let mut files = WrittenFiles::default();
    let path = out_dir.join("power_sweep.csv");
    table.write(&path)?;
    files.add(path);
    let path = out_dir.join("counting_report.json");
    write_json(&path, &report)?;
    files.add(path);
    Ok(files)
}

/// Dispatch by command name; returns the list of files written.
pub fn run_command(
    command: &str,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<WrittenFiles, SfwmError> {
    match command {
        "phasematch-curve" => cmd_phasematch_curve(cfg, out_dir),
        "jsa" => cmd_jsa(cfg, out_dir),
        "sweep-pump-bandwidth" => cmd_sweep_pump_bandwidth(cfg, out_dir),
        "sweep-inhomogeneity" => cmd_sweep_inhomogeneity(cfg, out_dir),
        "count-sim" => cmd_count_sim(cfg, out_dir),
        other => Err(SfwmError::UnknownCommand(other.to_string())),
    }
}
