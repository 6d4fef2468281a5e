//! Design and simulation toolkit for heralded single-photon sources based
//! on spontaneous four-wave mixing in birefringent waveguides.
//!
//! The crate is organized along the physics pipeline:
//!
//! - [`units`]: unit conventions and small numeric helpers.
//! - [`dispersion`]: Sellmeier refractive index and birefringent axes.
//! - [`phasematch`]: phase mismatch, matched wavelength pairs, and the
//!   longitudinal phase-matching amplitude, including inhomogeneous
//!   birefringence profiles.
//! - [`jsa`]: spectral grids, pump envelopes, the joint spectral amplitude,
//!   and spectral filters.
//! - [`schmidt`]: Schmidt decomposition, purity, and correlation metrics.
//! - [`counting`]: Monte Carlo click counting with losses and noise, and
//!   the matching analytic click model.
//! - [`config`], [`commands`], [`output`]: the JSON-configured CLI layer.

pub mod commands;
pub mod config;
pub mod counting;
pub mod dispersion;
pub mod jsa;
pub mod output;
pub mod phasematch;
pub mod schmidt;
pub mod units;

use thiserror::Error;

pub use counting::{
    AnalyticEstimates, CountTallies, CountingError, DetectionTopology, Estimate, ExperimentSpec,
    NoiseModel, PairSource,
};
pub use dispersion::{Axis, BirefringentWaveguide, DispersionError, Sellmeier};
pub use jsa::{
    Arm, FilteredAmplitude, GridError, JointAmplitude, PumpPulse, SpectralFilter, SpectralGrid,
};
pub use phasematch::{BirefringenceProfile, PhasematchError, PhasematchSolution};
pub use schmidt::{CauchySchwarzReport, SchmidtDecomposition, SchmidtError};

/// Top-level error type: every failure a command can hit.
#[derive(Debug, Error)]
pub enum SfwmError {
    #[error(transparent)]
    Dispersion(#[from] dispersion::DispersionError),
    #[error(transparent)]
    Phasematch(#[from] phasematch::PhasematchError),
    #[error(transparent)]
    Grid(#[from] jsa::GridError),
    #[error(transparent)]
    Schmidt(#[from] schmidt::SchmidtError),
    #[error(transparent)]
    Counting(#[from] counting::CountingError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("unknown command {0:?}")]
    UnknownCommand(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl SfwmError {
    /// Process exit code: 2 for configuration/usage problems, 3 for
    /// runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            SfwmError::Config(_) | SfwmError::UnknownCommand(_) => 2,
            _ => 3,
        }
    }
}
