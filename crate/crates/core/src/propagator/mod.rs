//! Coupled condensate / atom-beam / probe-light propagation.

mod calibrate;
mod cross;
mod engine;
mod state;

pub use calibrate::{calibrate_two_photon_detuning, CalibrationOptions};
pub use cross::{cross_propagate_light, CrossCoefficients, LightMedium};
pub use engine::{absorber_profile, Coefficients, Propagator};
pub use state::{grid_norm, Column, ColumnLedger, DetectorRecord, FieldState, Ledger};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{steps_for, Grid1D};
use crate::model::{ground_state, PhysicalParams, ValidityConfig};
use crate::stats::atomic_overlap;
use crate::units;

/// Switches for individual terms of the equations of motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsToggles {
    /// −|Ω23|²/Δ on the untrapped state.
    pub control_light_shift: bool,
    /// −(|g13|²/Δ)|E|² on the condensate.
    pub probe_light_shift: bool,
    /// (|g13|²/Δ)|φ1|² refractive index seen by the probe.
    pub condensate_index: bool,
    /// Add the squeezed-vacuum contributions of the tracked columns to the
    /// condensate equation.
    pub fluctuation_backaction: bool,
    /// Harmonic confinement of the condensate.
    pub trap: bool,
    /// Width of each absorbing edge as a fraction of the grid.
    pub absorber_fraction: f64,
    /// Peak absorption rate of the edges, s⁻¹.
    pub absorber_rate: f64,
    /// Residual optical frame detuning, rad/s.
    pub frame_detuning: f64,
}

impl Default for PhysicsToggles {
    fn default() -> Self {
        Self {
            control_light_shift: true,
            probe_light_shift: true,
            condensate_index: true,
            fluctuation_backaction: false,
            trap: true,
            absorber_fraction: 0.05,
            absorber_rate: 2e3,
            frame_detuning: 0.0,
        }
    }
}

/// How the local-oscillator phases are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LoPhaseMode {
    /// One phase per output, fixed at the first evaluable sample.
    #[default]
    Fixed,
    /// Re-aligned with the mean field at every sample.
    PerSample,
}

/// Temporal profile of the optical local oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OpticalLo {
    /// Flat top over the transit-delayed image of the atomic window.
    Flat,
    /// The atomic window pulled back through the initial condensate profile,
    /// so its edges carry the same blur as the emitted atoms.
    #[default]
    Matched,
}

/// A fully resolved run description (SI units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: PhysicalParams,
    pub grid: Grid1D,
    /// Simulated time, s.
    pub duration: f64,
    /// Atomic quadrature window [x1, x2], m.
    pub atom_window: [f64; 2],
    /// Detector plane for the transmitted probe, m.
    pub detector_x: f64,
    /// Atomic LO wavenumber in the displaced frame, m⁻¹.
    pub lo_wavenumber: f64,
    pub lo_phase: LoPhaseMode,
    #[serde(default)]
    pub optical_lo: OpticalLo,
    /// Input temporal window [0, T] of the squeezed light, s.
    pub input_window: f64,
    /// Width of each input temporal slot, s.
    pub slot_width: f64,
    /// Cadence of quadrature evaluation, s.
    pub eval_interval: f64,
    /// Snapshot cadence, s (0 = initial and final only).
    pub snapshot_interval: f64,
    pub physics: PhysicsToggles,
    pub validity: ValidityConfig,
}

impl Scenario {
    /// Reference parameters on the default grid.
    pub fn reference(omega23: f64, duration: f64) -> Self {
        Self {
            params: PhysicalParams::reference(omega23),
            grid: Grid1D::default_for_duration(duration),
            duration,
            atom_window: [5e-5, 4.7e-4],
            detector_x: 1e-4,
            lo_wavenumber: 0.0,
            lo_phase: LoPhaseMode::Fixed,
            optical_lo: OpticalLo::Matched,
            input_window: duration,
            slot_width: 5e-4,
            eval_interval: 1e-3,
            snapshot_interval: 5e-3,
            physics: PhysicsToggles::default(),
            validity: ValidityConfig::default(),
        }
    }

    /// Sets the duration and keeps the step count and input window consistent.
    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self.grid.n_steps = steps_for(duration, self.grid.dt);
        self.input_window = self.input_window.min(duration).max(0.0);
        if self.input_window == 0.0 || self.input_window > duration {
            self.input_window = duration;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate(&self.validity)?;
        self.grid.validate(self.params.m)?;
        if !(self.duration >= 0.0) {
            return Err(Error::validation("duration", "must be non-negative"));
        }
        if self.grid.n_steps != steps_for(self.duration, self.grid.dt) {
            return Err(Error::validation(
                "grid.n_steps",
                "inconsistent with duration / dt",
            ));
        }
        let [x1, x2] = self.atom_window;
        if !(x1 < x2) {
            return Err(Error::validation("atom_window", "x1 must be below x2"));
        }
        if x1 < self.grid.x_min || x2 > self.grid.x_max {
            return Err(Error::validation("atom_window", "window lies outside the grid"));
        }
        let support = 6.0 * self.params.oscillator_length();
        if !(self.detector_x > support && self.detector_x < self.grid.x_max) {
            return Err(Error::validation(
                "detector_x",
                format!("detector must lie beyond the condensate (> {support:.3e} m) and inside the grid"),
            ));
        }
        if !(self.input_window >= 0.0 && self.input_window <= self.duration + 1e-15) {
            return Err(Error::validation("input_window", "must lie within [0, duration]"));
        }
        if !(self.slot_width > 0.0) {
            return Err(Error::validation("slot_width", "must be positive"));
        }
        if !(self.eval_interval > 0.0) {
            return Err(Error::validation("eval_interval", "must be positive"));
        }
        if !(self.snapshot_interval >= 0.0) {
            return Err(Error::validation("snapshot_interval", "must be non-negative"));
        }
        let ph = &self.physics;
        if !(0.0..0.5).contains(&ph.absorber_fraction) || ph.absorber_rate < 0.0 {
            return Err(Error::validation("physics.absorber_fraction", "must be in [0, 0.5)"));
        }
        Ok(())
    }

    /// Input slots as half-open step ranges tiling [0, T].
    pub fn input_slots(&self) -> Vec<(usize, usize)> {
        let total = steps_for(self.input_window, self.grid.dt).min(self.grid.n_steps);
        let per = ((self.slot_width / self.grid.dt).round() as usize).max(1);
        let mut out = Vec::new();
        let mut start = 0;
        while start < total {
            let end = (start + per).min(total);
            out.push((start, end));
            start = end;
        }
        out
    }

    /// Flat-top input modes for each slot.
    pub fn input_modes(&self) -> Vec<InputMode> {
        let dt = units::time_in(self.grid.dt);
        self.input_slots()
            .into_iter()
            .map(|(start, end)| InputMode::Slot {
                start,
                end,
                width: (end - start) as f64 * dt,
            })
            .collect()
    }

    /// Mean outcoupled atom speed, m/s.
    pub fn atom_velocity(&self) -> f64 {
        self.params.atom_velocity()
    }
}

/// Boundary drive of one fluctuation column.
#[derive(Clone)]
pub enum InputMode {
    /// Flat-top over steps `[start, end)`, unit photon norm over its `width`
    /// (internal time units).
    Slot { start: usize, end: usize, width: f64 },
    /// Arbitrary amplitude in SI (m^(-1/2)) as a function of SI time.
    Function(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

impl fmt::Debug for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputMode::Slot { start, end, width } => f
                .debug_struct("Slot")
                .field("start", start)
                .field("end", end)
                .field("width", width)
                .finish(),
            InputMode::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl InputMode {
    /// Boundary amplitude during step `step` whose midpoint is `t_mid` (internal).
    pub fn amplitude(&self, step: usize, t_mid: f64, c: f64) -> Complex64 {
        match self {
            InputMode::Slot { start, end, width } => {
                if step >= *start && step < *end {
                    Complex64::new(1.0 / (c * width).sqrt(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            InputMode::Function(f) => f(units::time_out(t_mid)) * units::LENGTH_UNIT.sqrt(),
        }
    }

    pub fn is_active(&self, step: usize) -> bool {
        match self {
            InputMode::Slot { start, .. } => step >= *start,
            InputMode::Function(_) => true,
        }
    }
}

/// Field snapshot in SI units (amplitudes in m^(-1/2)).
///
/// `f_psi`/`f_e` are the response to the flat-top input mode over [0, T],
/// i.e. the normalised sum of all slot columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub phi1: Vec<Complex64>,
    pub psi2: Vec<Complex64>,
    pub e_mean: Vec<Complex64>,
    pub f_psi: Vec<Complex64>,
    pub f_e: Vec<Complex64>,
}

/// Atomic-window overlaps at one evaluation time, before any LO phase is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicSample {
    /// SI time.
    pub t: f64,
    /// Overlap of the mean atomic field with the atomic LO, atoms^(1/2).
    pub mean: Complex64,
    /// Overlap of each column with the atomic LO.
    pub columns: Vec<Complex64>,
}

/// Population bookkeeping at one evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerSample {
    pub t: f64,
    pub condensate: f64,
    pub beam: f64,
    pub atoms_lost: f64,
    pub photons_in: f64,
    pub photons_out: f64,
}

impl LedgerSample {
    /// Relative drift of total atom number N1 + N2 + lost.
    pub fn atom_residual(&self, n0: f64) -> f64 {
        let total = self.condensate + self.beam + self.atoms_lost;
        (total - n0).abs() / n0.max(1.0)
    }

    /// Relative violation of N2 + lost + (photons out − photons in) = 0.
    pub fn exchange_residual(&self) -> f64 {
        let net = self.beam + self.atoms_lost + self.photons_out - self.photons_in;
        net.abs() / self.photons_in.max(self.beam + self.atoms_lost).max(1e-300)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Propagate the squeezed-input columns.
    pub fluctuations: bool,
    /// Keep field snapshots.
    pub snapshots: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            fluctuations: true,
            snapshots: true,
        }
    }
}

/// Output of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub detector: DetectorRecord,
    pub atomic_samples: Vec<AtomicSample>,
    pub ledger_samples: Vec<LedgerSample>,
    pub final_state: FieldState,
    /// Photon-norm weights combining columns into the [0, T] flat-top mode.
    pub aggregate_weights: Vec<f64>,
    pub n_atoms: f64,
    /// Condensate amplitude at t = 0 on the grid (SI).
    pub initial_condensate: Vec<Complex64>,
}

impl Trajectory {
    pub fn ledger_at_end(&self) -> Option<&LedgerSample> {
        self.ledger_samples.last()
    }
}

/// Integrates the scenario, failing on the first integration error.
pub fn run(scenario: &Scenario) -> Result<Trajectory> {
    run_with(scenario, RunOptions::default())
}

pub fn run_with(scenario: &Scenario, opts: RunOptions) -> Result<Trajectory> {
    let (traj, err) = run_partial(scenario, opts)?;
    match err {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

/// Integrates the scenario, returning whatever was computed before an
/// integration failure alongside the failure. Validation errors are returned
/// as `Err`.
pub fn run_partial(scenario: &Scenario, opts: RunOptions) -> Result<(Trajectory, Option<Error>)> {
    scenario.validate()?;
    let inputs = if opts.fluctuations {
        scenario.input_modes()
    } else {
        Vec::new()
    };
    let mut prop = Propagator::new(scenario, inputs);
    run_propagator(scenario, &mut prop, opts)
}

/// Run loop over an already-built propagator (custom input modes).
pub fn run_propagator(
    scenario: &Scenario,
    prop: &mut Propagator,
    opts: RunOptions,
) -> Result<(Trajectory, Option<Error>)> {
    let profile = ground_state(&scenario.params, &scenario.grid)?;
    let initial_condensate = profile.values.clone();
    let phi: Vec<Complex64> = profile
        .values
        .iter()
        .map(|v| v * units::LENGTH_UNIT.sqrt())
        .collect();
    let mut state = prop.initial_state(phi);
    let weights = aggregate_weights(prop.inputs());

    let dt = scenario.grid.dt;
    let n_steps = scenario.grid.n_steps;
    let every = |interval: f64| -> usize {
        if interval <= 0.0 {
            usize::MAX
        } else {
            ((interval / dt).round() as usize).max(1)
        }
    };
    let snap_every = every(scenario.snapshot_interval);
    let eval_every = every(scenario.eval_interval);

    let x_si = scenario.grid.positions();
    let dx = units::length_in(scenario.grid.dx());
    let window = [
        units::length_in(scenario.atom_window[0]),
        units::length_in(scenario.atom_window[1]),
    ];
    let k_lo = units::wavenumber_in(scenario.lo_wavenumber);
    let x_in: Vec<f64> = x_si.iter().map(|&x| units::length_in(x)).collect();

    let mut snapshots = Vec::new();
    let mut samples = Vec::new();
    let mut ledger_samples = Vec::new();

    let take_snapshot = |state: &FieldState| -> Snapshot {
        let to_si = |v: &[Complex64]| -> Vec<Complex64> {
            v.iter().map(|z| z / units::LENGTH_UNIT.sqrt()).collect()
        };
        let agg = state.combined_column(&weights);
        Snapshot {
            t: units::time_out(state.t),
            x: x_si.clone(),
            phi1: to_si(&state.phi1),
            psi2: to_si(&state.psi2),
            e_mean: to_si(&state.e_mean),
            f_psi: to_si(&agg.f_psi),
            f_e: to_si(&agg.f_e),
        }
    };
    let ledger_sample = |state: &FieldState| LedgerSample {
        t: units::time_out(state.t),
        condensate: grid_norm(&state.phi1, dx),
        beam: grid_norm(&state.psi2, dx),
        atoms_lost: state.ledger.atoms_lost,
        photons_in: state.ledger.photons_in,
        photons_out: state.ledger.photons_out,
    };
    let atomic_sample = |state: &FieldState| AtomicSample {
        t: units::time_out(state.t),
        mean: atomic_overlap(&state.psi2, &x_in, window, k_lo),
        columns: state
            .columns
            .iter()
            .map(|c| atomic_overlap(&c.f_psi, &x_in, window, k_lo))
            .collect(),
    };

    if opts.snapshots {
        snapshots.push(take_snapshot(&state));
    }
    ledger_samples.push(ledger_sample(&state));

    let mut failure = None;
    for n in 1..=n_steps {
        if let Err(e) = prop.step(&mut state) {
            failure = Some(e);
            break;
        }
        let is_last = n == n_steps;
        let snap = opts.snapshots && (n % snap_every == 0 || is_last);
        let eval = n % eval_every == 0;
        if snap {
            prop.refresh_light(&mut state);
            snapshots.push(take_snapshot(&state));
        }
        if eval {
            samples.push(atomic_sample(&state));
        }
        if eval || is_last {
            ledger_samples.push(ledger_sample(&state));
        }
    }
    if failure.is_none() {
        prop.refresh_light(&mut state);
    }
    Ok((
        Trajectory {
            snapshots,
            detector: state.detector.clone(),
            atomic_samples: samples,
            ledger_samples,
            final_state: state,
            aggregate_weights: weights,
            n_atoms: scenario.params.n_atoms,
            initial_condensate,
        },
        failure,
    ))
}

/// Weights w_j = sqrt(width_j / T) so that Σ w_j u_j is the flat-top mode on [0, T].
pub fn aggregate_weights(inputs: &[InputMode]) -> Vec<f64> {
    let widths: Vec<f64> = inputs
        .iter()
        .map(|m| match m {
            InputMode::Slot { width, .. } => *width,
            InputMode::Function(_) => 0.0,
        })
        .collect();
    let total: f64 = widths.iter().sum();
    if total > 0.0 {
        widths.iter().map(|w| (w / total).sqrt()).collect()
    } else {
        let mut w = vec![0.0; inputs.len()];
        if let Some(first) = w.first_mut() {
            *first = 1.0;
        }
        w
    }
}
