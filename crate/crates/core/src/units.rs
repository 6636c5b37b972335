//! Input unit conventions and conversions.
//!
//! Internal units: time in femtoseconds, energies and angular frequencies in
//! rad/fs (energies are pre-divided by hbar, so hbar = 1 internally), and
//! fields scaled so that a dipole in atomic units times an internal field is
//! directly a coupling in rad/fs. Inputs are accepted in spectroscopy units
//! (wavenumbers in cm^-1, time in fs, fields in V/cm, dipoles in atomic
//! units) and converted once at ingestion.

use crate::error::CoreError;
use crate::scalar::Float;

/// Speed of light in cm/s (exact).
pub const SPEED_OF_LIGHT_CM_PER_S: f64 = 2.99792458e10;
/// Reduced Planck constant in J s.
pub const HBAR_JS: f64 = 1.054571817e-34;
/// Elementary charge times Bohr radius (atomic unit of dipole) in C m.
pub const DIPOLE_AU_CM: f64 = 8.4783536255e-30;

/// Three-level benchmark constants, in input units.
///
/// A V-type system: ground level coupled to two excited levels by allowed
/// transitions; the excited-excited transition is dipole-forbidden.
pub mod benchmark {
    /// Ground level energy, cm^-1.
    pub const E1_INVCM: f64 = 0.0;
    /// First excited level energy, cm^-1.
    pub const E2_INVCM: f64 = 12578.95;
    /// Second excited level energy, cm^-1.
    pub const E3_INVCM: f64 = 12816.55;
    /// Dipole moment of the 1-2 transition, atomic units.
    pub const MU12_AU: f64 = 2.9931;
    /// Dipole moment of the 1-3 transition, atomic units.
    pub const MU13_AU: f64 = 4.2275;
    /// Carrier wavenumber of the pulse spectrum, cm^-1.
    pub const CARRIER_INVCM: f64 = 12698.0;
    /// Spectral width of the pulse spectrum, cm^-1.
    pub const WIDTH_INVCM: f64 = 177.0;
    /// Peak field amplitude, V/cm.
    pub const PEAK_FIELD_VCM: f64 = 3.6e6;
    /// Control horizon, fs.
    pub const HORIZON_FS: f64 = 200.0;
}

/// Conversion factors between input units and internal units.
///
/// Construct with [`UnitSystem::default`]; all factors derive from the
/// physical constants above. The field conversion absorbs e*a0/hbar, so a
/// dipole entered in atomic units stays numerically unchanged internally and
/// (dipole * internal field) is a coupling in rad/fs.
#[derive(Debug, Clone)]
pub struct UnitSystem<T: Float> {
    /// Speed of light, cm/s.
    pub speed_of_light_cm_per_s: T,
    /// hbar in J s (used only to build factors).
    pub hbar_js: T,
    /// hbar in internal units; identically 1 because energies are rad/fs.
    pub hbar_internal: T,
    /// Multiplies cm^-1 to give rad/fs.
    pub wavenumber_to_radfs: T,
    /// Multiplies fs to give internal time (identity).
    pub fs_to_internal: T,
    /// Multiplies V/cm to give internal field.
    pub field_vcm_to_internal: T,
    /// Multiplies atomic-unit dipoles to give internal dipoles (identity).
    pub dipole_au_to_internal: T,
}

impl<T: Float> Default for UnitSystem<T> {
    fn default() -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        let wavenumber_to_radfs = two_pi * SPEED_OF_LIGHT_CM_PER_S * 1e-15;
        // e*a0 [C m] * 100 [per V/cm -> V/m] / hbar [J s] -> rad/s per (V/cm * a.u.),
        // then 1e-15 for rad/fs.
        let field_vcm_to_internal = DIPOLE_AU_CM * 100.0 / HBAR_JS * 1e-15;
        UnitSystem {
            speed_of_light_cm_per_s: T::of(SPEED_OF_LIGHT_CM_PER_S),
            hbar_js: T::of(HBAR_JS),
            hbar_internal: T::one(),
            wavenumber_to_radfs: T::of(wavenumber_to_radfs),
            fs_to_internal: T::one(),
            field_vcm_to_internal: T::of(field_vcm_to_internal),
            dipole_au_to_internal: T::one(),
        }
    }
}

impl<T: Float> UnitSystem<T> {
    /// Converts a wavenumber in cm^-1 to an angular frequency in rad/fs.
    pub fn wavenumber_to_angular_frequency(&self, invcm: T) -> T {
        invcm * self.wavenumber_to_radfs
    }

    /// Converts an angular frequency in rad/fs back to cm^-1.
    pub fn angular_frequency_to_wavenumber(&self, radfs: T) -> T {
        radfs / self.wavenumber_to_radfs
    }

    /// Converts a level energy in cm^-1 to rad/fs (energies carry 1/hbar).
    pub fn energy_to_internal(&self, invcm: T) -> T {
        self.wavenumber_to_angular_frequency(invcm)
    }

    /// Converts a time in fs to internal time.
    pub fn time_to_internal(&self, fs: T) -> T {
        fs * self.fs_to_internal
    }

    /// Converts a field amplitude in V/cm to internal field units.
    pub fn field_to_internal(&self, vcm: T) -> T {
        vcm * self.field_vcm_to_internal
    }

    /// Converts an internal field back to V/cm.
    pub fn field_to_vcm(&self, internal: T) -> T {
        internal / self.field_vcm_to_internal
    }

    /// Converts a dipole in atomic units to internal units.
    pub fn dipole_to_internal(&self, au: T) -> T {
        au * self.dipole_au_to_internal
    }

    /// Validates that the system's factors are finite and positive.
    pub fn validate(&self) -> Result<(), CoreError> {
        let factors = [
            self.wavenumber_to_radfs,
            self.fs_to_internal,
            self.field_vcm_to_internal,
            self.dipole_au_to_internal,
        ];
        for f in factors {
            if !(f.is_finite() && f > T::zero()) {
                return Err(CoreError::InvalidParameter(format!(
                    "unit conversion factor must be finite and positive, got {f}"
                )));
            }
        }
        Ok(())
    }
}
