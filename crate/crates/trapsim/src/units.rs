//! Physical constants and unit conversions.
//!
//! Everything inside the library works in SI units with angular frequencies
//! (rad/s). Plain hertz and ppm appear only at reporting and configuration
//! boundaries; these helpers mark those boundaries explicitly.

/// Elementary charge in coulombs (exact SI).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Unified atomic mass unit in kilograms.
pub const ATOMIC_MASS_KG: f64 = 1.660_539_066_60e-27;

/// Coulomb constant 1/(4 pi eps0) in N m^2 / C^2.
pub const COULOMB_CONSTANT: f64 = 8.987_551_792_3e9;

/// Mass of a ytterbium-171 atom in atomic mass units.
pub const YB171_MASS_AMU: f64 = 170.936_323;

/// Angular frequency (rad/s) for a frequency given in hertz.
pub fn angular_from_hz(f_hz: f64) -> f64 {
    std::f64::consts::TAU * f_hz
}

/// Frequency in hertz for an angular frequency (rad/s).
pub fn hz_from_angular(omega: f64) -> f64 {
    omega / std::f64::consts::TAU
}

/// Fractional deviation of `value` from `reference`, in parts per million.
pub fn ppm_of(value: f64, reference: f64) -> f64 {
    (value - reference) / reference * 1e6
}
