//! Run configuration: JSON-backed, with every field defaulting to the
//! reference birefringent-silica source so partial configs deep-merge over
//! the defaults.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::counting::{DetectionTopology, NoiseModel};
use crate::jsa::Arm;
use crate::phasematch::BirefringenceProfile;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown preset {0:?} (available: \"paper\")")]
    UnknownPreset(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Complete run description. All sections are optional in the JSON file;
/// omitted fields keep reference values.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dispersion: DispersionConfig,
    pub geometry: GeometryConfig,
    pub pump: PumpConfig,
    pub grid: GridConfig,
    pub profile: BirefringenceProfile,
    pub filter: Option<FilterConfig>,
    pub phasematch_curve: PhasematchCurveConfig,
    pub pump_sweep: PumpSweepConfig,
    pub inhomogeneity_sweep: InhomogeneitySweepConfig,
    pub counting: CountingConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    /// Peak birefringence split between the axes.
    pub delta_n0: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig { delta_n0: 1e-4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub length_um: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { length_um: 40_000.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpConfig {
    pub center_nm: f64,
    /// Intensity FWHM of the pump pulse spectrum.
    pub bandwidth_fwhm_nm: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        PumpConfig {
            center_nm: 729.0,
            bandwidth_fwhm_nm: 3.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Points per axis.
    pub n: usize,
    /// Span as a multiple of the larger of pump and phase-matching widths.
    pub span_factor: f64,
    /// Explicit signal window (center_nm, full_span_nm); overrides the
    /// automatic span when set.
    pub signal_window_nm: Option<(f64, f64)>,
    pub idler_window_nm: Option<(f64, f64)>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: 256,
            span_factor: 6.0,
            signal_window_nm: None,
            idler_window_nm: None,
        }
    }
}

/// Spectral filter placement on one output arm.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default = "default_filter_arm")]
    pub arm: Arm,
    pub shape: FilterShape,
    /// Filter center; defaults to the phase-matched wavelength of the arm.
    #[serde(default)]
    pub center_nm: Option<f64>,
}

fn default_filter_arm() -> Arm {
    Arm::Signal
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FilterShape {
    Tophat { width_nm: f64 },
    Gaussian { fwhm_nm: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhasematchCurveConfig {
    pub pump_min_nm: f64,
    pub pump_max_nm: f64,
    pub step_nm: f64,
}

impl Default for PhasematchCurveConfig {
    fn default() -> Self {
        PhasematchCurveConfig {
            pump_min_nm: 700.0,
            pump_max_nm: 1100.0,
            step_nm: 50.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpSweepConfig {
    pub min_nm: f64,
    pub max_nm: f64,
    pub step_nm: f64,
    /// Grid points per axis for the sweep (finer than the default grid so
    /// the purity maximum is well resolved).
    pub n: usize,
}

impl Default for PumpSweepConfig {
    fn default() -> Self {
        PumpSweepConfig {
            min_nm: 0.5,
            max_nm: 8.0,
            step_nm: 0.5,
            n: 512,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InhomogeneitySweepConfig {
    /// Birefringence deviation scales for the random-segment ensemble.
    pub random_delta_dn: Vec<f64>,
    /// Deviation scales for the linear-gradient profile.
    pub linear_delta_dn: Vec<f64>,
    pub seeds: u64,
    pub seed_base: u64,
    pub segments: usize,
    /// Purity level used to report where each profile family leaves the
    /// acceptable band.
    pub purity_floor: f64,
    /// Deviation scale at which the random-vs-uniform purity difference is
    /// summarized.
    pub enhancement_reference_delta_dn: f64,
}

impl Default for InhomogeneitySweepConfig {
    fn default() -> Self {
        InhomogeneitySweepConfig {
            random_delta_dn: vec![2.5e-7, 5e-7, 1e-6, 1.5e-6, 2e-6, 2.5e-6, 3e-6, 4e-6],
            linear_delta_dn: vec![5e-7, 1e-6, 1.5e-6, 2e-6, 2.5e-6, 3e-6, 4e-6, 6e-6],
            seeds: 50,
            seed_base: 1,
            segments: 400,
            purity_floor: 0.82,
            enhancement_reference_delta_dn: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SourceSpec {
    /// All pairs in one Schmidt mode with mean `mu`.
    SingleMode,
    /// Distribute `mu` over the Schmidt modes of the configured JSA.
    Schmidt,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountingConfig {
    /// Mean pair number per pulse for the single-power run.
    pub mu: f64,
    pub source: SourceSpec,
    pub n_pulses: u64,
    pub seed: u64,
    pub noise: NoiseModel,
    /// Topologies simulated in the single-power run.
    pub topologies: Vec<DetectionTopology>,
    /// When present, run a pump-power sweep instead of the single run.
    pub power_sweep: Option<PowerSweepConfig>,
}

impl Default for CountingConfig {
    fn default() -> Self {
        CountingConfig {
            mu: 0.01,
            source: SourceSpec::SingleMode,
            n_pulses: 10_000_000,
            seed: 1,
            noise: NoiseModel {
                eta_signal_path: 0.8,
                eta_idler_path: 0.8,
                eta_det: 0.5,
                dark_click: 2e-6,
                raman_signal: 0.0,
                raman_idler: 0.0,
            },
            topologies: vec![
                DetectionTopology::Cross,
                DetectionTopology::SignalAuto,
                DetectionTopology::IdlerAuto,
                DetectionTopology::HeraldedIdler,
            ],
            power_sweep: None,
        }
    }
}

/// Average-power sweep. Pair gain scales quadratically with power,
/// spontaneous Raman scattering linearly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerSweepConfig {
    pub min_mw: f64,
    pub max_mw: f64,
    pub step_mw: f64,
    /// Mean pair number per pulse at 100 mW.
    pub mu_at_100mw: f64,
    /// Mean Raman photons per pulse per mW, idler arm.
    pub raman_idler_per_mw: f64,
    /// Mean Raman photons per pulse per mW, signal arm.
    pub raman_signal_per_mw: f64,
    /// Power at which the model heralded g2 is reported separately.
    pub report_power_mw: f64,
}

impl Default for PowerSweepConfig {
    fn default() -> Self {
        PowerSweepConfig {
            min_mw: 10.0,
            max_mw: 150.0,
            step_mw: 10.0,
            mu_at_100mw: 1.5e-3,
            raman_idler_per_mw: 1.6941996624e-4,
            raman_signal_per_mw: 0.0,
            report_power_mw: 25.0,
        }
    }
}

impl RunConfig {
    /// The built-in reference configuration.
    pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
        match name {
            "paper" => Ok(RunConfig::default()),
            other => Err(ConfigError::UnknownPreset(other.to_string())),
        }
    }

    /// Load a (possibly partial) JSON config file; omitted fields keep the
    /// reference values.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("geometry.length_um", self.geometry.length_um),
            ("pump.center_nm", self.pump.center_nm),
            ("pump.bandwidth_fwhm_nm", self.pump.bandwidth_fwhm_nm),
            ("grid.span_factor", self.grid.span_factor),
            ("phasematch_curve.step_nm", self.phasematch_curve.step_nm),
            ("pump_sweep.step_nm", self.pump_sweep.step_nm),
            ("counting.mu", self.counting.mu),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, lo, hi) in [
            (
                "phasematch_curve",
                self.phasematch_curve.pump_min_nm,
                self.phasematch_curve.pump_max_nm,
            ),
            ("pump_sweep", self.pump_sweep.min_nm, self.pump_sweep.max_nm),
        ] {
            if !(lo > 0.0 && hi >= lo) {
                return Err(ConfigError::Invalid(format!(
                    "{name} range [{lo}, {hi}] must be positive and ordered"
                )));
            }
        }
        if let Some(sweep) = &self.counting.power_sweep {
            if !(sweep.min_mw > 0.0 && sweep.max_mw >= sweep.min_mw && sweep.step_mw > 0.0) {
                return Err(ConfigError::Invalid(
                    "counting.power_sweep power range must be positive and ordered".into(),
                ));
            }
        }
        if self.counting.topologies.is_empty() {
            return Err(ConfigError::Invalid(
                "counting.topologies must not be empty".into(),
            ));
        }
        if self.inhomogeneity_sweep.seeds == 0 {
            return Err(ConfigError::Invalid(
                "inhomogeneity_sweep.seeds must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
