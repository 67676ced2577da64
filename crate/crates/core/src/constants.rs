//! Physical constants (SI, 2019 redefinition where applicable) and the
//! unit conversions used at API boundaries.
//!
//! Lengths are accepted in micrometres and frequencies in hertz throughout
//! the crate; everything is converted to SI internally.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Micrometres to metres.
pub const UM: f64 = 1e-6;

/// Femtofarads to farads.
pub const FEMTO: f64 = 1e-15;

/// Converts a power in dBm to watts: P[W] = 1e-3 * 10^(dBm/10).
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Converts a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}
