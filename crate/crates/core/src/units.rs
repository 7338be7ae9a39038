//! Physical constants and the internal unit system.
//!
//! Inputs arrive in SI. The propagator works in a rescaled system with
//! ħ = 1, length in micrometres and time in milliseconds, which keeps all
//! field amplitudes and rates within a few decades of unity.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_8128e-12;

/// Length unit, m.
pub const LENGTH_UNIT: f64 = 1e-6;
/// Time unit, s.
pub const TIME_UNIT: f64 = 1e-3;

#[inline]
pub fn length_in(x: f64) -> f64 {
    x / LENGTH_UNIT
}

#[inline]
pub fn length_out(x: f64) -> f64 {
    x * LENGTH_UNIT
}

#[inline]
pub fn time_in(t: f64) -> f64 {
    t / TIME_UNIT
}

#[inline]
pub fn time_out(t: f64) -> f64 {
    t * TIME_UNIT
}

/// Angular frequency or rate, s⁻¹ → internal.
#[inline]
pub fn rate_in(w: f64) -> f64 {
    w * TIME_UNIT
}

#[inline]
pub fn rate_out(w: f64) -> f64 {
    w / TIME_UNIT
}

#[inline]
pub fn wavenumber_in(k: f64) -> f64 {
    k * LENGTH_UNIT
}

#[inline]
pub fn velocity_in(v: f64) -> f64 {
    v * TIME_UNIT / LENGTH_UNIT
}

/// Field amplitude, m^(-1/2) → internal.
#[inline]
pub fn amplitude_in(a: f64) -> f64 {
    a * LENGTH_UNIT.sqrt()
}

#[inline]
pub fn amplitude_out(a: f64) -> f64 {
    a / LENGTH_UNIT.sqrt()
}

/// Coupling with units rad·s⁻¹·m^(1/2) → internal.
#[inline]
pub fn coupling_in(g: f64) -> f64 {
    g * TIME_UNIT / LENGTH_UNIT.sqrt()
}

/// ħ/m in internal units for a mass given in kg.
#[inline]
pub fn hbar_over_mass_in(mass: f64) -> f64 {
    HBAR / mass * TIME_UNIT / (LENGTH_UNIT * LENGTH_UNIT)
}
