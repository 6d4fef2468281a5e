//! Material dispersion and the fast/slow axis split of a weakly
//! birefringent waveguide.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::SPEED_OF_LIGHT_UM_PER_PS;

#[derive(Debug, Error, PartialEq)]
pub enum DispersionError {
    #[error("wavelength {wavelength_nm} nm outside model validity range {min_nm}..{max_nm} nm")]
    WavelengthOutOfRange {
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },
}

/// Three-term Sellmeier model, n^2 = 1 + sum_j b_j lambda^2 / (lambda^2 - c_j),
/// with lambda in micrometres.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sellmeier {
    pub b: [f64; 3],
    /// Resonance wavelengths squared, um^2.
    pub c_um2: [f64; 3],
    /// Wavelength validity window, nm.
    pub valid_nm: (f64, f64),
}

impl Sellmeier {
    /// Fused silica at room temperature (fit valid 210..3710 nm).
    pub fn fused_silica() -> Self {
        Sellmeier {
            b: [0.6961663, 0.4079426, 0.8974794],
            c_um2: [
                0.0684043 * 0.0684043,
                0.1162414 * 0.1162414,
                9.896161 * 9.896161,
            ],
            valid_nm: (210.0, 3710.0),
        }
    }

    pub fn refractive_index(&self, wavelength_nm: f64) -> Result<f64, DispersionError> {
        let (min_nm, max_nm) = self.valid_nm;
        if !(wavelength_nm >= min_nm && wavelength_nm <= max_nm) {
            return Err(DispersionError::WavelengthOutOfRange {
                wavelength_nm,
                min_nm,
                max_nm,
            });
        }
        let l2 = (wavelength_nm / 1e3) * (wavelength_nm / 1e3);
        let mut n2 = 1.0;
        for j in 0..3 {
            n2 += self.b[j] * l2 / (l2 - self.c_um2[j]);
        }
        Ok(n2.sqrt())
    }
}

/// Polarization axis of the waveguide. The slow axis carries the larger
/// refractive index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Fast,
    Slow,
}

/// Isotropic material dispersion plus a small wavelength-independent index
/// difference `delta_n0` between the slow and fast axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BirefringentWaveguide {
    pub sellmeier: Sellmeier,
    /// n_slow - n_fast; positive, typically ~1e-4.
    pub delta_n0: f64,
}

impl BirefringentWaveguide {
    /// Fused-silica waveguide with the default birefringence 1e-4.
    pub fn default_silica() -> Self {
        BirefringentWaveguide {
            sellmeier: Sellmeier::fused_silica(),
            delta_n0: 1e-4,
        }
    }

    /// Phase index on the given axis: the isotropic index +/- delta_n0 / 2.
    pub fn index(&self, axis: Axis, wavelength_nm: f64) -> Result<f64, DispersionError> {
        let n = self.sellmeier.refractive_index(wavelength_nm)?;
        Ok(match axis {
            Axis::Slow => n + self.delta_n0 / 2.0,
            Axis::Fast => n - self.delta_n0 / 2.0,
        })
    }

    /// Wavenumber k = n(omega) * omega / c on the given axis, rad/um.
    pub fn wavenumber(&self, axis: Axis, omega_rad_per_ps: f64) -> Result<f64, DispersionError> {
        let wavelength_nm = crate::units::wavelength_nm_from_angular_frequency(omega_rad_per_ps);
        Ok(self.index(axis, wavelength_nm)? * omega_rad_per_ps / SPEED_OF_LIGHT_UM_PER_PS)
    }

    /// Group index n_g = n - lambda dn/dlambda (central difference with a
    /// relative step of 1e-4).
    pub fn group_index(&self, axis: Axis, wavelength_nm: f64) -> Result<f64, DispersionError> {
        let h = 1e-4 * wavelength_nm;
        let n_plus = self.index(axis, wavelength_nm + h)?;
        let n_minus = self.index(axis, wavelength_nm - h)?;
        let n = self.index(axis, wavelength_nm)?;
        Ok(n - wavelength_nm * (n_plus - n_minus) / (2.0 * h))
    }

    /// Group velocity c / n_g, um/ps.
    pub fn group_velocity_um_per_ps(
        &self,
        axis: Axis,
        wavelength_nm: f64,
    ) -> Result<f64, DispersionError> {
        Ok(SPEED_OF_LIGHT_UM_PER_PS / self.group_index(axis, wavelength_nm)?)
    }
}
