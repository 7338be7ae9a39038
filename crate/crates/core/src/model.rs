//! Physical parameters and the quantities derived from them.
//!
//! Everything here is SI and pure. The propagator converts to internal units
//! on ingestion (see [`crate::units`]).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::units::{C_LIGHT, EPSILON_0, HBAR};

/// Physical constants and experimental settings of one outcoupler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Atomic mass, kg.
    pub m: f64,
    /// Atom–light coupling coefficient, rad·s⁻¹·m^(1/2).
    pub g13: f64,
    /// One-photon detuning of the control beam, rad/s.
    pub delta: f64,
    /// Control-beam Rabi frequency, rad/s.
    pub omega23: f64,
    /// Control-beam wavenumber, m⁻¹.
    pub k0: f64,
    /// Probe-beam wavenumber, m⁻¹ (signed; counter-propagating means kp = -k0).
    pub kp: f64,
    /// Trap angular frequency, rad/s.
    pub omega_trap: f64,
    /// Initial condensate atom number.
    pub n_atoms: f64,
    /// Mean probe photon flux, s⁻¹.
    pub probe_flux: f64,
    /// Squeezing parameter.
    pub r: f64,
    /// Squeezing phase, rad (0 = amplitude squeezed).
    pub theta_sq: f64,
    /// Two-photon detuning of the probe mode from bare resonance, rad/s.
    pub delta2: f64,
    /// Optical carrier frequency, rad/s.
    pub omega0: f64,
}

/// Validity margins. Both are "much greater than" factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidityConfig {
    /// Required ratio of |Δ| to every other frequency scale.
    pub adiabatic_factor: f64,
    /// Required ratio of atom number to squeezed-vacuum photon number.
    pub feasibility_margin: f64,
}

impl Default for ValidityConfig {
    fn default() -> Self {
        Self {
            adiabatic_factor: 100.0,
            feasibility_margin: 100.0,
        }
    }
}

/// Rubidium-87 D2 wavelength used for the default wavenumbers.
pub const RB87_WAVELENGTH: f64 = 780e-9;

impl PhysicalParams {
    /// The reference ⁸⁷Rb parameter set at the given control Rabi frequency.
    pub fn reference(omega23: f64) -> Self {
        let k0 = 2.0 * PI / RB87_WAVELENGTH;
        let mut p = Self {
            m: 1.4e-25,
            g13: 2.9e5,
            delta: 1e11,
            omega23,
            k0,
            kp: -k0,
            omega_trap: 5.0,
            n_atoms: 1e6,
            probe_flux: 2.9e6,
            r: 2.0,
            theta_sq: 0.0,
            delta2: 0.0,
            omega0: 2.0 * PI * C_LIGHT / RB87_WAVELENGTH,
        };
        p.delta2 = p.resonance_estimate(true);
        p
    }

    /// Momentum kick wavenumber |k0 − kp|, m⁻¹.
    pub fn kick_wavenumber(&self) -> f64 {
        (self.k0 - self.kp).abs()
    }

    /// Mean speed of the outcoupled atoms, m/s.
    pub fn atom_velocity(&self) -> f64 {
        HBAR * self.kick_wavenumber() / self.m
    }

    /// Recoil frequency ħ|k0 − kp|²/(2m), rad/s.
    pub fn recoil_frequency(&self) -> f64 {
        let k = self.kick_wavenumber();
        HBAR * k * k / (2.0 * self.m)
    }

    /// Harmonic oscillator length sqrt(ħ/(m ω_trap)), m.
    pub fn oscillator_length(&self) -> f64 {
        (HBAR / (self.m * self.omega_trap)).sqrt()
    }

    /// Raman coupling g13·Ω23/Δ, rad·s⁻¹·m^(1/2).
    pub fn raman_coupling(&self) -> f64 {
        self.g13 * self.omega23 / self.delta
    }

    /// Light shift of the untrapped state from the control beam, |Ω23|²/Δ.
    pub fn control_light_shift(&self) -> f64 {
        self.omega23 * self.omega23 / self.delta
    }

    /// Dispersive coefficient |g13|²/Δ, m/s.
    pub fn dispersive_coefficient(&self) -> f64 {
        self.g13 * self.g13 / self.delta
    }

    /// Analytic two-photon resonance: recoil minus (optionally) the control light shift.
    ///
    /// The condensate-induced index of the probe enters the quasi-static light
    /// equation as a wavenumber shift rather than a frequency shift, so it does
    /// not move the Raman resonance and is left out.
    pub fn resonance_estimate(&self, control_shift: bool) -> f64 {
        let shift = if control_shift {
            self.control_light_shift()
        } else {
            0.0
        };
        self.recoil_frequency() - shift
    }

    pub fn validate(&self, validity: &ValidityConfig) -> Result<()> {
        let finite = [
            ("m", self.m),
            ("g13", self.g13),
            ("delta", self.delta),
            ("omega23", self.omega23),
            ("k0", self.k0),
            ("kp", self.kp),
            ("omega_trap", self.omega_trap),
            ("n_atoms", self.n_atoms),
            ("probe_flux", self.probe_flux),
            ("r", self.r),
            ("theta_sq", self.theta_sq),
            ("delta2", self.delta2),
            ("omega0", self.omega0),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::validation(name, "must be finite"));
            }
        }
        if self.m <= 0.0 {
            return Err(Error::validation("m", "mass must be positive"));
        }
        if self.delta == 0.0 {
            return Err(Error::validation("delta", "detuning must be non-zero"));
        }
        if self.n_atoms < 0.0 {
            return Err(Error::validation("n_atoms", "must be non-negative"));
        }
        if self.probe_flux < 0.0 {
            return Err(Error::validation("probe_flux", "must be non-negative"));
        }
        if self.r < 0.0 {
            return Err(Error::validation("r", "must be non-negative"));
        }
        if self.omega_trap <= 0.0 {
            return Err(Error::validation("omega_trap", "must be positive"));
        }
        if self.k0 == 0.0 {
            return Err(Error::validation("k0", "must be non-zero"));
        }
        let kick = self.kick_wavenumber();
        if ((kick - 2.0 * self.k0.abs()) / (2.0 * self.k0.abs())).abs() > 1e-6 {
            return Err(Error::validation(
                "kp",
                "counter-propagating geometry requires |k0 - kp| = 2|k0|",
            ));
        }
        if !(validity.adiabatic_factor > 0.0) {
            return Err(Error::validation(
                "validity.adiabatic_factor",
                "must be positive",
            ));
        }
        let probe_density = self.probe_flux / C_LIGHT;
        let scales = [
            ("omega23", self.omega23.abs()),
            ("control light shift", self.control_light_shift().abs()),
            ("probe Rabi frequency", self.g13.abs() * probe_density.sqrt()),
            (
                "probe light shift",
                self.dispersive_coefficient().abs() * probe_density,
            ),
            ("recoil frequency", self.recoil_frequency()),
        ];
        for (name, scale) in scales {
            if self.delta.abs() < validity.adiabatic_factor * scale {
                return Err(Error::validation(
                    "delta",
                    format!(
                        "|delta| = {:.3e} is not {}x larger than the {} {:.3e}; adiabatic elimination invalid",
                        self.delta.abs(),
                        validity.adiabatic_factor,
                        name,
                        scale
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Condensate wavefunction φ1 sampled on a grid, m^(-1/2).
#[derive(Debug, Clone, PartialEq)]
pub struct CondensateProfile {
    pub values: Vec<Complex64>,
    pub grid: Grid1D,
}

impl CondensateProfile {
    /// Discrete ∫|φ1|² dx.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Discrete ∫φ1 dx.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.dx()
    }
}

/// g13 = (d13/ħ)·sqrt(ħ ω_k / (2 ε0)).
pub fn coupling_coefficient(d13: f64, omega_k: f64) -> Result<f64> {
    if !(omega_k > 0.0) {
        return Err(Error::validation("omega_k", "must be positive"));
    }
    if d13 < 0.0 {
        return Err(Error::validation("d13", "must be non-negative"));
    }
    Ok(d13 / HBAR * (HBAR * omega_k / (2.0 * EPSILON_0)).sqrt())
}

/// Inverse of [`coupling_coefficient`] in the dipole moment.
pub fn dipole_for_coupling(g13: f64, omega_k: f64) -> Result<f64> {
    if !(omega_k > 0.0) {
        return Err(Error::validation("omega_k", "must be positive"));
    }
    Ok(g13 * HBAR / (HBAR * omega_k / (2.0 * EPSILON_0)).sqrt())
}

/// Harmonic-trap ground state centred at x = 0, normalised to `n_atoms`.
pub fn ground_state(params: &PhysicalParams, grid: &Grid1D) -> Result<CondensateProfile> {
    let a = params.oscillator_length();
    // density at the nearer edge relative to the peak
    let edge = grid.x_min.abs().min(grid.x_max.abs());
    if grid.x_min >= 0.0 || grid.x_max <= 0.0 || (-(edge * edge) / (a * a)).exp() >= 1e-12 {
        return Err(Error::validation(
            "grid",
            format!(
                "grid [{:.3e}, {:.3e}] m does not contain the condensate tail (width {a:.3e} m)",
                grid.x_min, grid.x_max
            ),
        ));
    }
    let n = grid.n_points;
    if params.n_atoms == 0.0 {
        return Ok(CondensateProfile {
            values: vec![Complex64::new(0.0, 0.0); n],
            grid: *grid,
        });
    }
    let mut values: Vec<Complex64> = (0..n)
        .map(|j| {
            let x = grid.x(j);
            Complex64::new((-x * x / (2.0 * a * a)).exp(), 0.0)
        })
        .collect();
    let norm = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx();
    let scale = (params.n_atoms / norm).sqrt();
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(CondensateProfile {
        values,
        grid: *grid,
    })
}

/// |g13 Ω23*/Δ · ∫φ1 dx|.
pub fn effective_rabi(params: &PhysicalParams, profile: &CondensateProfile) -> f64 {
    params.raman_coupling().abs() * profile.integral().norm()
}

/// Which reading of the quarter-period transfer condition to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuarterPeriodConvention {
    /// Ω_eff = sqrt(mω/ħ)·ħ|k0−kp|π/(2m) / scale: a quarter Rabi period equals the
    /// time to cross `scale` oscillator lengths.
    TrapLength { scale: f64 },
    /// Coupled-field pulse area Ω_eff/sqrt(c·v_atom) = π/2, the exact
    /// complete-transfer condition of the steady-state light/atom equations.
    PulseArea,
}

impl Default for QuarterPeriodConvention {
    fn default() -> Self {
        QuarterPeriodConvention::TrapLength { scale: 1.0 }
    }
}

impl QuarterPeriodConvention {
    /// Target effective Rabi frequency for complete transfer.
    pub fn target(&self, params: &PhysicalParams) -> f64 {
        match *self {
            QuarterPeriodConvention::TrapLength { scale } => {
                (params.m * params.omega_trap / HBAR).sqrt() * HBAR * params.kick_wavenumber() * PI
                    / (2.0 * params.m)
                    / scale
            }
            QuarterPeriodConvention::PulseArea => 0.5 * PI * (C_LIGHT * params.atom_velocity()).sqrt(),
        }
    }
}

/// Control Rabi frequency at which the effective Rabi frequency hits the
/// quarter-period target (default convention).
pub fn optimal_rabi23(params: &PhysicalParams, profile: &CondensateProfile) -> Result<f64> {
    optimal_rabi23_with(params, profile, QuarterPeriodConvention::default())
}

pub fn optimal_rabi23_with(
    params: &PhysicalParams,
    profile: &CondensateProfile,
    convention: QuarterPeriodConvention,
) -> Result<f64> {
    let overlap = profile.integral().norm();
    if overlap == 0.0 || profile.norm() == 0.0 {
        return Err(Error::validation("profile", "condensate has zero norm"));
    }
    if params.g13 == 0.0 {
        return Err(Error::validation("g13", "zero coupling cannot reach any target"));
    }
    Ok(convention.target(params) * params.delta.abs() / (params.g13.abs() * overlap))
}

/// Photon number of a squeezed vacuum over one drain time, against the atom number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub n_photons: f64,
    pub feasible: bool,
}

pub fn squeezed_flux_feasibility(r: f64, n_atoms: f64) -> FeasibilityReport {
    squeezed_flux_feasibility_with(r, n_atoms, ValidityConfig::default().feasibility_margin)
}

pub fn squeezed_flux_feasibility_with(r: f64, n_atoms: f64, margin: f64) -> FeasibilityReport {
    let n_photons = r.sinh().powi(2);
    FeasibilityReport {
        n_photons,
        feasible: n_photons < n_atoms / margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_grid() -> Grid1D {
        Grid1D::default_for_duration(0.04)
    }

    #[test]
    fn zero_dipole_gives_zero_coupling() {
        assert_eq!(coupling_coefficient(0.0, 2.4e15).unwrap(), 0.0);
    }

    #[test]
    fn coupling_rejects_non_positive_frequency() {
        assert!(coupling_coefficient(1e-29, 0.0).is_err());
        assert!(coupling_coefficient(1e-29, -1.0).is_err());
    }

    #[test]
    fn coupling_round_trip_at_780nm() {
        let omega_k = 2.0 * PI * C_LIGHT / 780e-9;
        let d13 = dipole_for_coupling(2.9e5, omega_k).unwrap();
        let g = coupling_coefficient(d13, omega_k).unwrap();
        assert!(((g - 2.9e5) / 2.9e5).abs() < 1e-9);
    }

    #[test]
    fn quadrupled_frequency_doubles_coupling() {
        let g1 = coupling_coefficient(3e-29, 1e15).unwrap();
        let g4 = coupling_coefficient(3e-29, 4e15).unwrap();
        assert!((g4 / g1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn oscillator_length_matches_closed_form() {
        let p = PhysicalParams::reference(1.5e8);
        let a = (1.054_571_817e-34_f64 / (1.4e-25 * 5.0)).sqrt();
        assert!((p.oscillator_length() - a).abs() < 1e-20);
        assert!((a - 1.227e-5).abs() < 1e-8);
    }

    #[test]
    fn ground_state_is_normalised() {
        let p = PhysicalParams::reference(1.5e8);
        let prof = ground_state(&p, &reference_grid()).unwrap();
        assert!((prof.norm() / 1e6 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_condensate_is_zero() {
        let mut p = PhysicalParams::reference(1.5e8);
        p.n_atoms = 0.0;
        let prof = ground_state(&p, &reference_grid()).unwrap();
        assert!(prof.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let p = PhysicalParams::reference(1.5e8);
        let g = Grid1D::new(-3e-5, 3e-5, 256, 1e-6, 1);
        assert!(matches!(ground_state(&p, &g), Err(Error::Validation { .. })));
    }

    #[test]
    fn effective_rabi_matches_gaussian_integral() {
        let p = PhysicalParams::reference(1.5e8);
        let prof = ground_state(&p, &reference_grid()).unwrap();
        let a = p.oscillator_length();
        let closed = p.raman_coupling() * 1e3 * (4.0 * PI * a * a).powf(0.25);
        let got = effective_rabi(&p, &prof);
        assert!(((got - closed) / closed).abs() < 1e-9);
        assert!((got - 2.9e3).abs() < 0.05e3, "{got}");
    }

    #[test]
    fn effective_rabi_vanishes_and_scales_with_control() {
        let grid = reference_grid();
        let mut p = PhysicalParams::reference(0.0);
        let prof = ground_state(&p, &grid).unwrap();
        assert_eq!(effective_rabi(&p, &prof), 0.0);
        p.omega23 = 1e8;
        let one = effective_rabi(&p, &prof);
        p.omega23 = 2e8;
        assert!((effective_rabi(&p, &prof) / one - 2.0).abs() < 1e-12);
    }

    #[test]
    fn effective_rabi_scales_with_real_amplitude() {
        let p = PhysicalParams::reference(1.5e8);
        let mut prof = ground_state(&p, &reference_grid()).unwrap();
        let base = effective_rabi(&p, &prof);
        prof.values.iter_mut().for_each(|v| *v *= 0.37);
        assert!((effective_rabi(&p, &prof) / base - 0.37).abs() < 1e-12);
    }

    #[test]
    fn quarter_period_target_value() {
        let p = PhysicalParams::reference(1.5e8);
        let a = p.oscillator_length();
        let direct = (1.0 / a) * HBAR * 2.0 * p.k0 * PI / (2.0 * p.m);
        let t = QuarterPeriodConvention::default().target(&p);
        assert!(((t - direct) / direct).abs() < 1e-12);
        assert!((t - 1.56e3).abs() < 0.01e3, "{t}");
    }

    #[test]
    fn optimal_rabi_round_trips_and_scales() {
        let mut p = PhysicalParams::reference(1.5e8);
        let prof = ground_state(&p, &reference_grid()).unwrap();
        let conv = QuarterPeriodConvention::default();
        let opt = optimal_rabi23(&p, &prof).unwrap();
        assert!(opt > 0.8e8 && opt < 3.2e8, "{opt}");
        let mut q = p;
        q.omega23 = opt;
        let back = effective_rabi(&q, &prof);
        assert!(((back - conv.target(&p)) / conv.target(&p)).abs() < 1e-9);
        p.g13 *= 10.0;
        let scaled = optimal_rabi23(&p, &prof).unwrap();
        assert!((scaled * 10.0 / opt - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pulse_area_convention_lands_near_reported_value() {
        let p = PhysicalParams::reference(1.5e8);
        let prof = ground_state(&p, &reference_grid()).unwrap();
        let opt = optimal_rabi23_with(&p, &prof, QuarterPeriodConvention::PulseArea).unwrap();
        assert!((opt - 1.6e8).abs() < 0.1e8, "{opt}");
    }

    #[test]
    fn optimal_rabi_rejects_empty_profile() {
        let mut p = PhysicalParams::reference(1.5e8);
        p.n_atoms = 0.0;
        let prof = ground_state(&p, &reference_grid()).unwrap();
        assert!(optimal_rabi23(&p, &prof).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let f0 = squeezed_flux_feasibility(0.0, 1e6);
        assert_eq!(f0.n_photons, 0.0);
        assert!(f0.feasible);
        let f = squeezed_flux_feasibility(2.0, 1e6);
        assert!((f.n_photons - 2.0f64.sinh().powi(2)).abs() < 1e-12);
        assert!((f.n_photons - 13.15).abs() < 0.01);
        assert!(f.feasible);
        assert!(!squeezed_flux_feasibility(2.0, 100.0).feasible);
    }

    #[test]
    fn reference_parameters_validate() {
        PhysicalParams::reference(1.5e8)
            .validate(&ValidityConfig::default())
            .unwrap();
    }

    #[test]
    fn small_detuning_breaks_adiabaticity() {
        let mut p = PhysicalParams::reference(1.5e8);
        p.delta = 1e6;
        assert!(matches!(
            p.validate(&ValidityConfig::default()),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn recoil_frequency_value() {
        let p = PhysicalParams::reference(1.5e8);
        let k = 2.0 * 2.0 * PI / 780e-9;
        let w = HBAR * k * k / (2.0 * 1.4e-25);
        assert!((p.recoil_frequency() - w).abs() < 1e-9 * w);
        assert!((w - 9.8e4).abs() < 0.1e4);
    }

    proptest! {
        #[test]
        fn coupling_squared_over_frequency_is_constant(w in 1e12f64..1e16) {
            let d = 2.5e-29;
            let ref_ratio = coupling_coefficient(d, 1e15).unwrap().powi(2) / 1e15;
            let ratio = coupling_coefficient(d, w).unwrap().powi(2) / w;
            prop_assert!(((ratio - ref_ratio) / ref_ratio).abs() < 1e-12);
        }

        #[test]
        fn ground_state_norm_on_random_grids(
            left in 1.0e-4f64..4e-4,
            right in 1.0e-4f64..2e-3,
            pow in 11u32..14,
            n in 1.0f64..1e7,
        ) {
            let mut p = PhysicalParams::reference(1e8);
            p.n_atoms = n;
            let g = Grid1D::new(-left, right, 1 << pow, 1e-6, 1);
            let prof = ground_state(&p, &g).unwrap();
            prop_assert!((prof.norm() / n - 1.0).abs() < 1e-6);
        }
    }
}
