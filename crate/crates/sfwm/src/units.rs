//! Unit conventions and conversions.
//!
//! Internal unit system, chosen so that typical magnitudes are O(1..1e5):
//!
//! * wavelength: nanometre (user-facing) or micrometre (material models)
//! * angular frequency: rad/ps
//! * wavenumber: rad/um
//! * length along the waveguide: um
//!
//! With these, `c = 299.792458 um/ps` and `k = n * omega / c` comes out in
//! rad/um directly.

/// Speed of light in vacuum, um/ps.
pub const SPEED_OF_LIGHT_UM_PER_PS: f64 = 299.792458;

/// Nanometres per micrometre.
pub const NM_PER_UM: f64 = 1e3;

/// Angular frequency (rad/ps) of light with the given vacuum wavelength (nm).
pub fn angular_frequency_rad_per_ps(wavelength_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_UM_PER_PS * NM_PER_UM / wavelength_nm
}

/// Vacuum wavelength (nm) of light with the given angular frequency (rad/ps).
pub fn wavelength_nm_from_angular_frequency(omega_rad_per_ps: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_UM_PER_PS * NM_PER_UM / omega_rad_per_ps
}

/// Width of an angular-frequency interval (rad/ps) corresponding to a small
/// wavelength interval (nm) centred on `wavelength_nm`.
pub fn bandwidth_rad_per_ps(bandwidth_nm: f64, wavelength_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_UM_PER_PS * NM_PER_UM * bandwidth_nm
        / (wavelength_nm * wavelength_nm)
}

/// sin(x)/x with the correct limit at x = 0.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        // Two-term series keeps full double precision for |x| < 1e-6.
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn frequency_wavelength_roundtrip() {
        for &nm in &[400.0, 676.0, 729.0, 790.0, 1550.0] {
            let w = angular_frequency_rad_per_ps(nm);
            assert_relative_eq!(wavelength_nm_from_angular_frequency(w), nm, max_relative = 1e-14);
        }
    }

    #[test]
    fn known_frequency_magnitude() {
        // 729 nm -> ~2583.9 rad/ps.
        let w = angular_frequency_rad_per_ps(729.0);
        assert_relative_eq!(w, 2583.8842, max_relative = 1e-6);
    }

    #[test]
    fn sinc_limit_and_zeros() {
        assert_eq!(sinc(0.0), 1.0);
        assert_relative_eq!(sinc(1e-8), 1.0, max_relative = 1e-15);
        assert!(sinc(std::f64::consts::PI).abs() < 1e-15);
        assert_relative_eq!(sinc(std::f64::consts::PI / 2.0), 2.0 / std::f64::consts::PI, max_relative = 1e-14);
    }
}
