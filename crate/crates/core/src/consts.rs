//! Physical constants (2019 SI exact values where applicable).

/// Planck constant [J·s], exact by SI definition.
pub const H_PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant ħ [J·s].
pub const HBAR: f64 = H_PLANCK / (2.0 * core::f64::consts::PI);

/// Elementary charge [C], exact by SI definition.
pub const E_CHARGE: f64 = 1.602_176_634e-19;

/// Superconducting flux quantum Φ₀ = h/2e [Wb].
pub const FLUX_QUANTUM: f64 = H_PLANCK / (2.0 * E_CHARGE);

/// Reduced flux quantum φ₀ = ħ/2e [Wb].
pub const REDUCED_FLUX_QUANTUM: f64 = HBAR / (2.0 * E_CHARGE);

/// Reduced resistance quantum R_Q = ħ/(2e)² [Ω].
pub const R_QUANTUM: f64 = HBAR / (4.0 * E_CHARGE * E_CHARGE);

/// One milliwatt [W]; reference power for dBm.
pub const MILLIWATT: f64 = 1.0e-3;
