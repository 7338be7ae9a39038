//! RK4 in the interaction picture (RK4IP) for the atomic fields, with the
//! probe light re-solved along x at every stage.
//!
//! Linear kinetic and frame terms are applied exactly in Fourier space; the
//! trap, absorber and light couplings go through the Runge–Kutta stages.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::cross::{CrossCoefficients, LightMedium};
use super::state::FieldState;
use super::{InputMode, Scenario};
use crate::error::{Error, Result};
use crate::grid::{fft_wavenumbers, Grid1D};
use crate::units;

type C = Complex64;

const ZERO: C = C { re: 0.0, im: 0.0 };

/// Internal-unit coefficients of the equations of motion.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub x: Vec<f64>,
    pub k: Vec<f64>,
    pub hbar_over_m: f64,
    pub kick: f64,
    /// Constant frame frequency of the untrapped state (−light shift − δ2).
    pub psi_frame: f64,
    pub trap: Vec<f64>,
    pub absorber: Vec<f64>,
    pub medium: LightMedium,
    pub probe_shift_coeff: f64,
    pub e_boundary: C,
    pub backaction: f64,
    pub detector_index: usize,
}

impl Coefficients {
    pub fn from_scenario(s: &Scenario) -> Self {
        let p = &s.params;
        let ph = &s.physics;
        let grid = &s.grid;
        let n = grid.n_points;
        let dx = units::length_in(grid.dx());
        let x: Vec<f64> = grid.positions().into_iter().map(units::length_in).collect();
        let hbar_over_m = units::hbar_over_mass_in(p.m);
        let omega_trap = units::rate_in(p.omega_trap);
        let trap = if ph.trap {
            x.iter()
                .map(|&xi| 0.5 * omega_trap * omega_trap * xi * xi / hbar_over_m)
                .collect()
        } else {
            vec![0.0; n]
        };
        let absorber = absorber_profile(grid, ph.absorber_fraction, units::rate_in(ph.absorber_rate));
        let c = units::velocity_in(units::C_LIGHT);
        let dispersive = units::coupling_in(p.g13).powi(2) / units::rate_in(p.delta);
        let shift = if ph.control_light_shift {
            units::rate_in(p.control_light_shift())
        } else {
            0.0
        };
        let coupling = units::coupling_in(p.raman_coupling());
        let e_boundary = C::new((units::rate_in(p.probe_flux) / c).sqrt(), 0.0);
        Self {
            n,
            dx,
            dt: units::time_in(grid.dt),
            k: fft_wavenumbers(n, dx),
            x,
            hbar_over_m,
            kick: units::wavenumber_in(p.kick_wavenumber()),
            psi_frame: -shift - units::rate_in(p.delta2),
            trap,
            absorber,
            medium: LightMedium {
                dx,
                c,
                index_coeff: if ph.condensate_index { dispersive } else { 0.0 },
                frame_detuning: units::rate_in(ph.frame_detuning),
                coupling,
            },
            probe_shift_coeff: if ph.probe_light_shift { dispersive } else { 0.0 },
            e_boundary,
            backaction: if ph.fluctuation_backaction {
                p.r.sinh().powi(2)
            } else {
                0.0
            },
            detector_index: grid.nearest_index(s.detector_x),
        }
    }
}

/// Smooth sin² ramp of an imaginary potential over `fraction` of the grid at each end.
pub fn absorber_profile(grid: &Grid1D, fraction: f64, strength: f64) -> Vec<f64> {
    let n = grid.n_points;
    let width = fraction * grid.length();
    (0..n)
        .map(|j| {
            if width <= 0.0 {
                return 0.0;
            }
            let x = grid.x(j);
            let from_left = x - grid.x_min;
            let from_right = grid.x_max - x;
            let depth = if from_left < width {
                1.0 - from_left / width
            } else if from_right < width {
                1.0 - from_right / width
            } else {
                0.0
            };
            strength * (0.5 * std::f64::consts::PI * depth).sin().powi(2)
        })
        .collect()
}

/// Per-stage boundary fluxes and detector samples.
#[derive(Debug, Clone, Default)]
struct StageRates {
    atoms_lost: f64,
    photons_in: f64,
    photons_out: f64,
    detector: C,
    col_in: Vec<f64>,
    col_out: Vec<f64>,
    col_lost: Vec<f64>,
    col_detector: Vec<C>,
}

impl StageRates {
    fn new(k: usize) -> Self {
        Self {
            col_in: vec![0.0; k],
            col_out: vec![0.0; k],
            col_lost: vec![0.0; k],
            col_detector: vec![ZERO; k],
            ..Self::default()
        }
    }
}

/// Steps a [`FieldState`] forward. Owns FFT plans and scratch space, so it
/// is built once per run.
pub struct Propagator {
    pub coeffs: Coefficients,
    inputs: Vec<InputMode>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<C>,
    cross: CrossCoefficients,
    cached_h: f64,
    half_phi: Vec<C>,
    half_psi: Vec<C>,
    // working storage indexed like `fields`: 0 = φ1, 1 = ψ2, 2.. = columns
    ui: Vec<Vec<C>>,
    acc: Vec<Vec<C>>,
    stage: Vec<Vec<C>>,
    kbuf: Vec<Vec<C>>,
    // light per source: 0 = mean, 1.. = columns
    light: Vec<Vec<C>>,
}

impl Propagator {
    pub fn new(scenario: &Scenario, inputs: Vec<InputMode>) -> Self {
        Self::from_coefficients(Coefficients::from_scenario(scenario), inputs)
    }

    pub fn from_coefficients(coeffs: Coefficients, inputs: Vec<InputMode>) -> Self {
        let n = coeffs.n;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        let nf = inputs.len() + 2;
        let buf = || vec![vec![ZERO; n]; nf];
        Self {
            cross: CrossCoefficients::new(n),
            scratch: vec![ZERO; scratch_len],
            fft,
            ifft,
            cached_h: f64::NAN,
            half_phi: vec![ZERO; n],
            half_psi: vec![ZERO; n],
            ui: buf(),
            acc: buf(),
            stage: buf(),
            kbuf: buf(),
            light: vec![vec![ZERO; n]; inputs.len() + 1],
            inputs,
            coeffs,
        }
    }

    pub fn n_columns(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[InputMode] {
        &self.inputs
    }

    /// Fresh state with the given condensate and every other field empty.
    pub fn initial_state(&mut self, phi1: Vec<C>) -> FieldState {
        let mut state = FieldState::zeros(self.coeffs.n, self.inputs.len());
        state.phi1 = phi1;
        self.refresh_light(&mut state);
        state
    }

    fn ensure_factors(&mut self, h: f64) {
        if self.cached_h == h {
            return;
        }
        let c = &self.coeffs;
        let norm = 1.0 / c.n as f64;
        for j in 0..c.n {
            let k = c.k[j];
            let w_phi = 0.5 * c.hbar_over_m * k * k;
            let kk = k + c.kick;
            let w_psi = 0.5 * c.hbar_over_m * kk * kk + c.psi_frame;
            self.half_phi[j] = C::from_polar(norm, -w_phi * 0.5 * h);
            self.half_psi[j] = C::from_polar(norm, -w_psi * 0.5 * h);
        }
        self.cached_h = h;
    }

    fn half_step_linear(&mut self, buf: &mut [C], is_condensate: bool) {
        self.fft.process_with_scratch(buf, &mut self.scratch);
        let f = if is_condensate {
            &self.half_phi
        } else {
            &self.half_psi
        };
        buf.iter_mut().zip(f).for_each(|(v, m)| *v *= m);
        self.ifft.process_with_scratch(buf, &mut self.scratch);
    }

    /// Boundary amplitude of each input mode during the step starting at `t`.
    fn boundaries(&self, step: usize, t: f64, h: f64) -> Vec<C> {
        let c = self.coeffs.medium.c;
        self.inputs
            .iter()
            .map(|m| m.amplitude(step, t + 0.5 * h, c))
            .collect()
    }

    fn active(&self, step: usize, col: usize) -> bool {
        self.inputs[col].is_active(step)
    }

    /// Recomputes the optical envelopes of `state` from its atomic fields.
    pub fn refresh_light(&mut self, state: &mut FieldState) {
        self.cross.update(&state.phi1, &self.coeffs.medium);
        let e0 = self.coeffs.e_boundary;
        self.cross.propagate(&state.psi2, e0, &mut state.e_mean);
        let h = self.coeffs.dt;
        let t = state.t;
        let step = state.step;
        let bounds = self.boundaries(step, t, h);
        for (j, col) in state.columns.iter_mut().enumerate() {
            self.cross.propagate(&col.f_psi, bounds[j], &mut col.f_e);
        }
    }

    /// Evaluates the right-hand side at `self.stage`, writing into `self.kbuf`.
    fn rhs(&mut self, active: &[bool], bounds: &[C], rates: &mut StageRates) {
        let c = &self.coeffs;
        let n = c.n;
        let i = C::i();
        self.cross.update(&self.stage[0], &c.medium);
        self.cross
            .propagate(&self.stage[1], c.e_boundary, &mut self.light[0]);
        for col in 0..bounds.len() {
            if active[col + 2] {
                self.cross
                    .propagate(&self.stage[col + 2], bounds[col], &mut self.light[col + 1]);
            }
        }

        let g = c.medium.coupling;
        let light_c = c.medium.c;
        let dx = c.dx;

        // condensate
        {
            let (phi, rest) = self.stage.split_first().unwrap();
            let psi = &rest[0];
            let e = &self.light[0];
            let out = &mut self.kbuf[0];
            for j in 0..n {
                let mut shift = c.probe_shift_coeff * e[j].norm_sqr();
                let mut drive = g * e[j].conj() * psi[j];
                if c.backaction != 0.0 {
                    for col in 0..bounds.len() {
                        if active[col + 2] {
                            let ec = self.light[col + 1][j];
                            shift += c.probe_shift_coeff * c.backaction * ec.norm_sqr();
                            drive += g * c.backaction * ec.conj() * rest[col + 1][j];
                        }
                    }
                }
                out[j] = -i * c.trap[j] * phi[j] + i * shift * phi[j] + i * drive;
            }
        }

        // untrapped atoms: mean field and columns share the same form
        for f in 1..self.stage.len() {
            if !active[f] {
                continue;
            }
            let e = &self.light[f - 1];
            let phi = &self.stage[0];
            let src = &self.stage[f];
            let out = &mut self.kbuf[f];
            let mut lost = 0.0;
            for j in 0..n {
                out[j] = i * g * phi[j] * e[j] - c.absorber[j] * src[j];
                lost += c.absorber[j] * src[j].norm_sqr();
            }
            let lost = 2.0 * lost * dx;
            let e_in = e[0].norm_sqr() * light_c;
            let e_out = e[n - 1].norm_sqr() * light_c;
            let det = e[c.detector_index];
            if f == 1 {
                rates.atoms_lost = lost;
                rates.photons_in = e_in;
                rates.photons_out = e_out;
                rates.detector = det;
            } else {
                let col = f - 2;
                rates.col_lost[col] = lost;
                rates.col_in[col] = e_in;
                rates.col_out[col] = e_out;
                rates.col_detector[col] = det;
            }
        }
    }

    /// One step of length `dt`.
    pub fn step(&mut self, state: &mut FieldState) -> Result<()> {
        let h = self.coeffs.dt;
        self.step_with_dt(state, h)
    }

    /// One step of arbitrary (possibly negative) length `h`, internal units.
    pub fn step_with_dt(&mut self, state: &mut FieldState, h: f64) -> Result<()> {
        self.ensure_factors(h);
        let ncol = self.inputs.len();
        let nf = ncol + 2;
        let n = self.coeffs.n;
        let step = state.step;
        let bounds = self.boundaries(step, state.t, h);
        let mut active = vec![true; nf];
        for col in 0..ncol {
            active[col + 2] = self.active(step, col);
        }

        // u_I = P(u)
        for f in 0..nf {
            if !active[f] {
                continue;
            }
            let src: &[C] = match f {
                0 => &state.phi1,
                1 => &state.psi2,
                _ => &state.columns[f - 2].f_psi,
            };
            let mut buf = std::mem::take(&mut self.ui[f]);
            buf.copy_from_slice(src);
            self.half_step_linear(&mut buf, f == 0);
            self.ui[f] = buf;
            self.stage[f].copy_from_slice(src);
        }

        let mut r = [
            StageRates::new(ncol),
            StageRates::new(ncol),
            StageRates::new(ncol),
            StageRates::new(ncol),
        ];

        // stage 1 at t
        self.rhs(&active, &bounds, &mut r[0]);
        for f in 0..nf {
            if !active[f] {
                continue;
            }
            let mut k = std::mem::take(&mut self.kbuf[f]);
            self.half_step_linear(&mut k, f == 0);
            for j in 0..n {
                self.acc[f][j] = self.ui[f][j] + (h / 6.0) * k[j];
                self.stage[f][j] = self.ui[f][j] + (0.5 * h) * k[j];
            }
            self.kbuf[f] = k;
        }
        // stage 2 at t + h/2
        self.rhs(&active, &bounds, &mut r[1]);
        for f in 0..nf {
            if !active[f] {
                continue;
            }
            for j in 0..n {
                let k = self.kbuf[f][j];
                self.acc[f][j] += (h / 3.0) * k;
                self.stage[f][j] = self.ui[f][j] + (0.5 * h) * k;
            }
        }
        // stage 3 at t + h/2
        self.rhs(&active, &bounds, &mut r[2]);
        for f in 0..nf {
            if !active[f] {
                continue;
            }
            let mut s = std::mem::take(&mut self.stage[f]);
            for j in 0..n {
                let k = self.kbuf[f][j];
                self.acc[f][j] += (h / 3.0) * k;
                s[j] = self.ui[f][j] + h * k;
            }
            self.half_step_linear(&mut s, f == 0);
            self.stage[f] = s;
        }
        // stage 4 at t + h
        self.rhs(&active, &bounds, &mut r[3]);
        for f in 0..nf {
            if !active[f] {
                continue;
            }
            let mut a = std::mem::take(&mut self.acc[f]);
            self.half_step_linear(&mut a, f == 0);
            let dst: &mut Vec<C> = match f {
                0 => &mut state.phi1,
                1 => &mut state.psi2,
                _ => &mut state.columns[f - 2].f_psi,
            };
            for j in 0..n {
                dst[j] = a[j] + (h / 6.0) * self.kbuf[f][j];
            }
            self.acc[f] = a;
        }

        // boundary ledgers and detector record, RK4-weighted over the step
        let w = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];
        let wsum = |get: &dyn Fn(&StageRates) -> f64| -> f64 {
            r.iter().zip(w).map(|(s, wi)| wi * get(s)).sum::<f64>()
        };
        state.ledger.atoms_lost += h * wsum(&|s| s.atoms_lost);
        state.ledger.photons_in += h * wsum(&|s| s.photons_in);
        state.ledger.photons_out += h * wsum(&|s| s.photons_out);
        let det: C = r.iter().zip(w).map(|(s, wi)| wi * s.detector).sum();
        state.detector.t_start.push(state.t);
        state.detector.dt.push(h);
        state.detector.e_mean.push(det);
        for col in 0..ncol {
            let l = &mut state.ledger.columns[col];
            if active[col + 2] {
                l.injected += h * wsum(&|s| s.col_in[col]);
                l.emitted += h * wsum(&|s| s.col_out[col]);
                l.lost += h * wsum(&|s| s.col_lost[col]);
                let d: C = r.iter().zip(w).map(|(s, wi)| wi * s.col_detector[col]).sum();
                state.detector.f_e.push(d);
            } else {
                state.detector.f_e.push(ZERO);
            }
        }

        state.t += h;
        state.step += 1;

        let sentinel = |v: &[C]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let mut check = sentinel(&state.phi1) + sentinel(&state.psi2);
        for col in &state.columns {
            check += sentinel(&col.f_psi);
        }
        if !check.is_finite() {
            return Err(Error::Integration {
                step: state.step,
                time: units::time_out(state.t),
                message: "non-finite field value".into(),
            });
        }
        Ok(())
    }
}
