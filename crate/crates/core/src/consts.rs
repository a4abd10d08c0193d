//! Physical constants shared across the crate.

/// Free-space wave impedance used throughout the scattering model (ohm).
pub const Z0: f64 = 377.0;

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;

/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// Vacuum permeability (H/m).
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
