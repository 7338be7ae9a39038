//! Output quadratures, Gaussian covariance assembly and EPR inference.
//!
//! Conventions: for a mode operator c, X⁺ = c + c† and X⁻ = i(c† − c), so the
//! vacuum variance is 1. Quadratures are ordered (X⁺, X⁻, Y⁺, Y⁻) with X the
//! atom beam and Y the transmitted probe.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagator::{grid_norm, FieldState, LoPhaseMode, OpticalLo, Scenario, Trajectory};
use crate::units;

/// The non-vacuum input: one squeezed coherent mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputState {
    pub r: f64,
    pub theta_sq: f64,
    /// Coherent amplitude, photons^(1/2).
    pub gamma: Complex64,
}

impl InputState {
    pub fn new(r: f64, theta_sq: f64, gamma: Complex64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::validation("r", "must be non-negative"));
        }
        Ok(Self { r, theta_sq, gamma })
    }

    pub fn covariance(&self) -> Matrix2<f64> {
        input_covariance(self.r, self.theta_sq)
    }
}

/// R(θ/2)·diag(e^(−2r), e^(2r))·R(θ/2)ᵀ.
pub fn input_covariance(r: f64, theta_sq: f64) -> Matrix2<f64> {
    let (s, c) = (0.5 * theta_sq).sin_cos();
    let rot = Matrix2::new(c, -s, s, c);
    let d = Matrix2::new((-2.0 * r).exp(), 0.0, 0.0, (2.0 * r).exp());
    rot * d * rot.transpose()
}

/// ∫ L*(x) f(x) dx over `window` with L = e^(i k x)/sqrt(x2 − x1).
///
/// The integrand is interpolated linearly between grid points, so partial
/// cells at the window edges are handled exactly for constant integrands.
pub fn atomic_overlap(field: &[Complex64], x: &[f64], window: [f64; 2], k_lo: f64) -> Complex64 {
    let [x1, x2] = window;
    let norm = 1.0 / (x2 - x1).sqrt();
    let g = |j: usize| field[j] * Complex64::from_polar(norm, -k_lo * x[j]);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..x.len().saturating_sub(1) {
        let (xa, xb) = (x[j], x[j + 1]);
        if xb <= x1 || xa >= x2 {
            continue;
        }
        let lo = xa.max(x1);
        let hi = xb.min(x2);
        let (ga, gb) = (g(j), g(j + 1));
        let at = |xx: f64| ga + (gb - ga) * ((xx - xa) / (xb - xa));
        acc += (at(lo) + at(hi)) * (0.5 * (hi - lo));
    }
    acc
}

/// sqrt(c)·∫ u*(t) f(t) dt with u flat and normalised on `window` (internal units).
///
/// `values[n]` is the average of f over step n.
pub fn optical_overlap(
    t_start: &[f64],
    dt: &[f64],
    values: impl Fn(usize) -> Complex64,
    window: [f64; 2],
    c: f64,
) -> Result<Complex64> {
    let [ta, tb] = window;
    let eps = 1e-9 * dt.first().copied().unwrap_or(1.0).abs();
    let t0 = t_start.first().copied().unwrap_or(0.0);
    let t1 = match (t_start.last(), dt.last()) {
        (Some(t), Some(h)) => t + h,
        _ => t0,
    };
    if !(tb > ta) || ta < t0 - eps || tb > t1 + eps {
        return Err(Error::validation(
            "optical window",
            format!("[{ta:.6}, {tb:.6}] ms lies outside the recorded [{t0:.6}, {t1:.6}] ms"),
        ));
    }
    let u = 1.0 / (tb - ta).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..t_start.len() {
        let a = t_start[n];
        let b = a + dt[n];
        let lo = a.max(ta);
        let hi = b.min(tb);
        if hi > lo {
            acc += values(n) * (hi - lo);
        }
    }
    Ok(acc * u * c.sqrt())
}

/// Output-mode overlaps at one evaluation time, LO phases applied.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputModes {
    /// SI time.
    pub t: f64,
    /// Atomic LO overlap with each input column.
    pub alpha_psi: Vec<Complex64>,
    /// Optical LO overlap with each input column.
    pub alpha_e: Vec<Complex64>,
    /// Mean-field overlaps (coherent amplitudes of the output modes).
    pub mean_psi: Complex64,
    pub mean_e: Complex64,
    pub lo_phase_psi: f64,
    pub lo_phase_e: f64,
}

impl OutputModes {
    /// Single-input-mode output with zero mean fields.
    pub fn single(alpha_psi: Complex64, alpha_e: Complex64) -> Self {
        Self {
            t: 0.0,
            alpha_psi: vec![alpha_psi],
            alpha_e: vec![alpha_e],
            mean_psi: Complex64::new(0.0, 0.0),
            mean_e: Complex64::new(0.0, 0.0),
            lo_phase_psi: 0.0,
            lo_phase_e: 0.0,
        }
    }

    /// Largest |α_ψ,j|² + |α_E,j|² over input modes (≤ 1 for a passive network).
    pub fn max_input_share(&self) -> f64 {
        self.alpha_psi
            .iter()
            .zip(&self.alpha_e)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .fold(0.0, f64::max)
    }

    /// Σ_j |α_ψ,j|² and Σ_j |α_E,j|².
    pub fn output_weights(&self) -> (f64, f64) {
        (
            self.alpha_psi.iter().map(|a| a.norm_sqr()).sum(),
            self.alpha_e.iter().map(|a| a.norm_sqr()).sum(),
        )
    }

    fn rotated(mut self, phase_psi: f64, phase_e: f64) -> Self {
        let rp = Complex64::from_polar(1.0, -phase_psi);
        let re = Complex64::from_polar(1.0, -phase_e);
        self.alpha_psi.iter_mut().for_each(|a| *a *= rp);
        self.alpha_e.iter_mut().for_each(|a| *a *= re);
        self.mean_psi *= rp;
        self.mean_e *= re;
        self.lo_phase_psi = phase_psi;
        self.lo_phase_e = phase_e;
        self
    }
}

/// Amplitude-quadrature phase: the mean field's phase, or the columns' when
/// there is no coherent amplitude to refer to.
fn reference_phase(mean: Complex64, columns: &[Complex64]) -> f64 {
    if mean.norm() > 1e-9 {
        return mean.arg();
    }
    let sum: Complex64 = columns.iter().sum();
    if sum.norm() > 0.0 {
        sum.arg()
    } else {
        0.0
    }
}

/// Optical window matched to the atomic window at time `t` (SI in, internal out).
pub fn matched_optical_window(scenario: &Scenario, t: f64) -> [f64; 2] {
    let v = scenario.atom_velocity();
    let [x1, x2] = scenario.atom_window;
    [units::time_in(t - x2 / v), units::time_in(t - x1 / v)]
}

/// Normalised optical LO profile for evaluation time `t` (SI), one value per
/// detector step.
///
/// The matched profile weights each emission time by the condensate amplitude
/// whose atoms land inside the atomic window at `t`.
pub fn optical_lo_profile(traj: &Trajectory, scenario: &Scenario, t: f64) -> Vec<f64> {
    let rec = &traj.detector;
    let [ta, tb] = matched_optical_window(scenario, t);
    let v = scenario.atom_velocity();
    let [x1, x2] = scenario.atom_window;
    let x = scenario.grid.positions();
    let mut u: Vec<f64> = (0..rec.len())
        .map(|n| match scenario.optical_lo {
            OpticalLo::Flat => {
                let (a, b) = (rec.t_start[n], rec.t_start[n] + rec.dt[n]);
                (b.min(tb) - a.max(ta)).max(0.0) / rec.dt[n]
            }
            OpticalLo::Matched => {
                let tp = units::time_out(rec.t_start[n] + 0.5 * rec.dt[n]);
                let shift = v * (t - tp);
                x.iter()
                    .zip(&traj.initial_condensate)
                    .filter(|(&x0, _)| (x1..=x2).contains(&(x0 + shift)))
                    .map(|(_, p)| p.re)
                    .sum()
            }
        })
        .collect();
    let norm = u.iter().zip(&rec.dt).map(|(a, h)| a * a * h).sum::<f64>().sqrt();
    if norm > 0.0 {
        u.iter_mut().for_each(|a| *a /= norm);
    }
    u
}

/// Output-mode overlaps for every evaluation sample whose transit-delayed
/// optical window is covered by the detector record. Earlier samples are skipped.
pub fn output_overlaps(traj: &Trajectory, scenario: &Scenario) -> Result<Vec<OutputModes>> {
    let rec = &traj.detector;
    let c = units::velocity_in(units::C_LIGHT).sqrt();
    let end = rec.t_start.last().zip(rec.dt.last()).map_or(0.0, |(t, h)| t + h);
    let mut raw = Vec::new();
    for sample in &traj.atomic_samples {
        let window = matched_optical_window(scenario, sample.t);
        if window[0] < 0.0 {
            continue;
        }
        if window[1] > end * (1.0 + 1e-9) {
            return Err(Error::validation(
                "optical window",
                format!("[{:.6}, {:.6}] ms lies outside the detector record", window[0], window[1]),
            ));
        }
        let u = optical_lo_profile(traj, scenario, sample.t);
        let project = |f: &dyn Fn(usize) -> Complex64| -> Complex64 {
            (0..rec.len())
                .filter(|&n| u[n] != 0.0)
                .map(|n| f(n) * (u[n] * rec.dt[n]))
                .sum::<Complex64>()
                * c
        };
        let mean_e = project(&|n| rec.e_mean[n]);
        let alpha_e = (0..rec.n_columns)
            .map(|col| project(&|n| rec.column(n, col)))
            .collect();
        raw.push(OutputModes {
            t: sample.t,
            alpha_psi: sample.columns.clone(),
            alpha_e,
            mean_psi: sample.mean,
            mean_e,
            lo_phase_psi: 0.0,
            lo_phase_e: 0.0,
        });
    }
    let fixed = raw.first().map(|m| {
        (
            reference_phase(m.mean_psi, &m.alpha_psi),
            reference_phase(m.mean_e, &m.alpha_e),
        )
    });
    Ok(raw
        .into_iter()
        .map(|m| {
            let (pp, pe) = match scenario.lo_phase {
                LoPhaseMode::Fixed => fixed.unwrap_or((0.0, 0.0)),
                LoPhaseMode::PerSample => (
                    reference_phase(m.mean_psi, &m.alpha_psi),
                    reference_phase(m.mean_e, &m.alpha_e),
                ),
            };
            m.rotated(pp, pe)
        })
        .collect())
}

/// Gaussian description of the two output modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianSummary {
    pub t: f64,
    /// Covariance over (X⁺, X⁻, Y⁺, Y⁻), vacuum = identity.
    pub sigma: [[f64; 4]; 4],
    pub means: [f64; 4],
    pub v_x_plus: f64,
    pub v_x_minus: f64,
    pub v_y_plus: f64,
    pub v_y_minus: f64,
    pub cov_plus: f64,
    pub cov_minus: f64,
    pub vinf_x_plus: f64,
    pub vinf_x_minus: f64,
    pub vinf_y_plus: f64,
    pub vinf_y_minus: f64,
    /// V_inf(X⁺)·V_inf(X⁻).
    pub product: f64,
    /// V_inf(Y⁺)·V_inf(Y⁻).
    pub product_y: f64,
    /// V(X⁺)·V(X⁻).
    pub uncertainty_x: f64,
    /// V(Y⁺)·V(Y⁻).
    pub uncertainty_y: f64,
    pub entangled: bool,
}

impl GaussianSummary {
    /// Summary of a covariance matrix before inference (V_inf = V).
    pub fn from_covariance(t: f64, sigma: [[f64; 4]; 4], means: [f64; 4]) -> Self {
        let v = |i: usize| sigma[i][i];
        let mut s = Self {
            t,
            sigma,
            means,
            v_x_plus: v(0),
            v_x_minus: v(1),
            v_y_plus: v(2),
            v_y_minus: v(3),
            cov_plus: sigma[0][2],
            cov_minus: sigma[1][3],
            vinf_x_plus: v(0),
            vinf_x_minus: v(1),
            vinf_y_plus: v(2),
            vinf_y_minus: v(3),
            product: v(0) * v(1),
            product_y: v(2) * v(3),
            uncertainty_x: v(0) * v(1),
            uncertainty_y: v(2) * v(3),
            entangled: false,
        };
        s.entangled = s.product < 1.0 || s.product_y < 1.0;
        s
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.sigma[i][j])
    }
}

/// The 2×2 real matrix of c → α c acting on (X⁺, X⁻).
fn mode_block(alpha: Complex64) -> Matrix2<f64> {
    Matrix2::new(alpha.re, -alpha.im, alpha.im, alpha.re)
}

/// σ_out = I + Σ_j M_j (σ_in − I) M_jᵀ, with M_j the stacked atomic and
/// optical blocks of input mode j.
pub fn assemble_covariance(modes: &OutputModes, sigma_in: &Matrix2<f64>) -> GaussianSummary {
    assemble_covariance_with_vacuum(modes, sigma_in, 1.0)
}

/// [`assemble_covariance`] with an adjustable vacuum constant (1 is physical).
pub fn assemble_covariance_with_vacuum(
    modes: &OutputModes,
    sigma_in: &Matrix2<f64>,
    vacuum: f64,
) -> GaussianSummary {
    let excess = sigma_in - Matrix2::identity();
    let mut out = Matrix4::<f64>::identity() * vacuum;
    for (a, e) in modes.alpha_psi.iter().zip(&modes.alpha_e) {
        let mut m = nalgebra::Matrix4x2::<f64>::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&mode_block(*a));
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&mode_block(*e));
        out += m * excess * m.transpose();
    }
    let sigma = std::array::from_fn(|i| std::array::from_fn(|j| out[(i, j)]));
    let means = [
        2.0 * modes.mean_psi.re,
        2.0 * modes.mean_psi.im,
        2.0 * modes.mean_e.re,
        2.0 * modes.mean_e.im,
    ];
    GaussianSummary::from_covariance(modes.t, sigma, means)
}

/// V − Cov²/V_other, or V unchanged when the conditioning variance vanishes.
fn inferred(v: f64, cov: f64, v_other: f64) -> f64 {
    if v_other.abs() <= f64::MIN_POSITIVE {
        v
    } else {
        v - cov * cov / v_other
    }
}

/// Fills in the inferred variances and the entanglement flag.
pub fn epr_inferred(summary: GaussianSummary) -> GaussianSummary {
    let mut s = summary;
    s.vinf_x_plus = inferred(s.v_x_plus, s.cov_plus, s.v_y_plus);
    s.vinf_x_minus = inferred(s.v_x_minus, s.cov_minus, s.v_y_minus);
    s.vinf_y_plus = inferred(s.v_y_plus, s.cov_plus, s.v_x_plus);
    s.vinf_y_minus = inferred(s.v_y_minus, s.cov_minus, s.v_x_minus);
    s.product = s.vinf_x_plus * s.vinf_x_minus;
    s.product_y = s.vinf_y_plus * s.vinf_y_minus;
    s.entangled = s.product < 1.0 || s.product_y < 1.0;
    s
}

/// Symplectic eigenvalues of a two-mode covariance (vacuum = 1).
pub fn symplectic_eigenvalues(sigma: &[[f64; 4]; 4]) -> [f64; 2] {
    let m = Matrix4::from_fn(|i, j| sigma[i][j]);
    let det2 = |r: usize, c: usize| m[(r, c)] * m[(r + 1, c + 1)] - m[(r, c + 1)] * m[(r + 1, c)];
    let delta = det2(0, 0) + det2(2, 2) + 2.0 * det2(0, 2);
    let det = m.determinant();
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let minus = (0.5 * (delta - disc)).max(0.0).sqrt();
    let plus = (0.5 * (delta + disc)).max(0.0).sqrt();
    [minus, plus]
}

/// Smallest eigenvalue of the (symmetrised) covariance.
pub fn min_eigenvalue(sigma: &[[f64; 4]; 4]) -> f64 {
    let m = Matrix4::from_fn(|i, j| 0.5 * (sigma[i][j] + sigma[j][i]));
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Full summary series of a trajectory.
pub fn summary_series(traj: &Trajectory, scenario: &Scenario) -> Result<Vec<GaussianSummary>> {
    let sigma_in = input_covariance(scenario.params.r, scenario.params.theta_sq);
    Ok(output_overlaps(traj, scenario)?
        .iter()
        .map(|m| epr_inferred(assemble_covariance(m, &sigma_in)))
        .collect())
}

/// Where the norm of each input column has gone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorNorm {
    /// ∫|f_ψ|² + atoms absorbed + photons emitted + photons in flight, per column.
    pub columns: Vec<f64>,
    /// Norm injected through the boundary so far, per column.
    pub injected: Vec<f64>,
    /// Atomic share ∫|f_ψ|² + absorbed, per column.
    pub atomic: Vec<f64>,
    /// The same for the flat-top mode over the whole input window.
    pub aggregate: f64,
    pub aggregate_injected: f64,
    pub aggregate_atomic: f64,
}

impl CommutatorNorm {
    /// Largest |norm − injected| over columns and the aggregate.
    pub fn max_residual(&self) -> f64 {
        self.columns
            .iter()
            .zip(&self.injected)
            .map(|(a, b)| (a - b).abs())
            .fold((self.aggregate - self.aggregate_injected).abs(), f64::max)
    }
}

pub fn commutator_norm(state: &FieldState, dx: f64, weights: &[f64]) -> CommutatorNorm {
    let mut columns = Vec::with_capacity(state.columns.len());
    let mut injected = Vec::with_capacity(state.columns.len());
    let mut atomic = Vec::with_capacity(state.columns.len());
    for (col, l) in state.columns.iter().zip(&state.ledger.columns) {
        let atoms = grid_norm(&col.f_psi, dx) + l.lost;
        let in_flight = grid_norm(&col.f_e, dx);
        columns.push(atoms + l.emitted + in_flight);
        injected.push(l.injected);
        atomic.push(atoms);
    }
    let wsum = |v: &[f64]| v.iter().zip(weights).map(|(a, w)| a * w * w).sum::<f64>();
    CommutatorNorm {
        aggregate: wsum(&columns),
        aggregate_injected: wsum(&injected),
        aggregate_atomic: wsum(&atomic),
        columns,
        injected,
        atomic,
    }
}

/// Commutator norm at the end of a trajectory.
pub fn trajectory_commutator_norm(traj: &Trajectory, scenario: &Scenario) -> CommutatorNorm {
    commutator_norm(
        &traj.final_state,
        units::length_in(scenario.grid.dx()),
        &traj.aggregate_weights,
    )
}
