//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs three 40 ms simulations on the default grid; expect several minutes
//! on a single core.

use atomlight::grid::Grid1D;
use atomlight::model::{ground_state, optimal_rabi23, squeezed_flux_feasibility};
use atomlight::oracle::{beamsplitter_summary, BeamSplitterCase};
use atomlight::propagator::{
    calibrate_two_photon_detuning, grid_norm, run_propagator, run_with, CalibrationOptions,
    Coefficients, InputMode, Propagator, RunOptions, Scenario, Trajectory,
};
use atomlight::stats::{
    assemble_covariance, epr_inferred, input_covariance, summary_series, trajectory_commutator_norm,
    GaussianSummary, OutputModes,
};
use atomlight::units;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;
use std::time::Instant;

type C = Complex64;

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(name: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { name, pass, detail }
}

struct Simulated {
    scenario: Scenario,
    traj: Trajectory,
    series: Vec<GaussianSummary>,
    seconds: f64,
}

fn simulate(scenario: Scenario) -> Simulated {
    let start = Instant::now();
    let traj = run_with(&scenario, RunOptions::default()).expect("simulation failed");
    let seconds = start.elapsed().as_secs_f64();
    let series = summary_series(&traj, &scenario).expect("quadrature summary failed");
    Simulated {
        scenario,
        traj,
        series,
        seconds,
    }
}

fn min_by(series: &[GaussianSummary], key: impl Fn(&GaussianSummary) -> f64) -> &GaussianSummary {
    series
        .iter()
        .min_by(|a, b| key(a).total_cmp(&key(b)))
        .expect("no evaluable samples")
}

fn oracle_exactness() -> Verdict {
    let s = beamsplitter_summary(&BeamSplitterCase::new(0.5, 2.0).unwrap()).unwrap();
    let pass = (s.vinf_x_plus - 0.03596).abs() < 1e-3
        && (s.vinf_x_minus - 1.9643).abs() < 1e-3
        && (s.product - 0.0706).abs() < 1e-3;
    verdict(
        "oracle exactness",
        pass,
        format!(
            "Vinf(X+) {:.5}, Vinf(X-) {:.4}, product {:.4}",
            s.vinf_x_plus, s.vinf_x_minus, s.product
        ),
    )
}

fn cross_module() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        for j in 0..50 {
            let eta = i as f64 / 49.0;
            let r = 3.0 * j as f64 / 49.0;
            let oracle = beamsplitter_summary(&BeamSplitterCase::new(eta, r).unwrap()).unwrap();
            let modes = OutputModes::single(C::new(eta.sqrt(), 0.0), C::new((1.0 - eta).sqrt(), 0.0));
            let assembled = epr_inferred(assemble_covariance(&modes, &input_covariance(r, 0.0)));
            for a in 0..4 {
                for b in 0..4 {
                    worst = worst.max((assembled.sigma[a][b] - oracle.sigma[a][b]).abs());
                }
            }
            for (x, y) in [
                (assembled.vinf_x_plus, oracle.vinf_x_plus),
                (assembled.vinf_x_minus, oracle.vinf_x_minus),
                (assembled.product, oracle.product),
            ] {
                if x.is_finite() || y.is_finite() {
                    worst = worst.max((x - y).abs());
                }
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    verdict(
        "cross-module equivalence",
        worst <= 1e-12 && seconds < 1.0,
        format!("max deviation {worst:.2e} over 50x50 (eta, r), {seconds:.3} s"),
    )
}

fn entanglement_point(run: &Simulated) -> Verdict {
    let best = min_by(&run.series, |s| s.product);
    let pass = best.product <= 0.15
        && (best.product - 0.085).abs() <= 0.5 * 0.085
        && (0.03..=0.10).contains(&best.vinf_x_plus)
        && run.seconds <= 600.0;
    verdict(
        "entanglement point (omega23 = 0.75e8)",
        pass,
        format!(
            "min product {:.4} at {:.1} ms, Vinf(X+) {:.4}, Vinf(X-) {:.4}, run {:.0} s",
            best.product,
            best.t * 1e3,
            best.vinf_x_plus,
            best.vinf_x_minus,
            run.seconds
        ),
    )
}

fn state_transfer(run: &Simulated, trailing: &Simulated) -> Verdict {
    let last = run.series.last().expect("no evaluable samples");
    let low = min_by(&trailing.series, |s| s.v_x_plus);
    let end = trailing.series.last().unwrap();
    let rising = trailing
        .series
        .windows(2)
        .filter(|w| w[0].t >= low.t)
        .all(|w| w[1].v_x_plus >= w[0].v_x_plus);
    let decay = end.v_x_plus > 1.5 * low.v_x_plus && rising;
    let pass = last.v_x_plus < 0.1 && last.v_y_plus > 0.8 && decay;
    verdict(
        "state transfer (omega23 = 1.5e8)",
        pass,
        format!(
            "V(X+) {:.4}, V(Y+) {:.4} at {:.1} ms; trailing window V(X+) {:.4} at {:.1} ms -> {:.4} at {:.1} ms",
            last.v_x_plus,
            last.v_y_plus,
            last.t * 1e3,
            low.v_x_plus,
            low.t * 1e3,
            end.v_x_plus,
            end.t * 1e3
        ),
    )
}

fn beam_profile(run: &Simulated) -> Verdict {
    let snap = run.traj.snapshots.last().unwrap();
    let first = &run.traj.snapshots[0];
    let beam: Vec<f64> = snap.psi2.iter().map(|z| z.norm_sqr()).collect();
    let peak_beam = beam.iter().cloned().fold(0.0, f64::max);
    let peak_condensate = first.phi1.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let front = snap
        .x
        .iter()
        .zip(&beam)
        .filter(|(_, &d)| d > 0.1 * peak_beam)
        .map(|(&x, _)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    let ratio = peak_beam / peak_condensate;
    let pass = (0.4e-3..=0.6e-3).contains(&front) && (1e-3..=1e-1).contains(&ratio);
    verdict(
        "beam profile at 40 ms",
        pass,
        format!("beam front {:.3} mm, beam/condensate peak density {ratio:.2e}", front * 1e3),
    )
}

fn short_scenario(omega23: f64, duration: f64) -> Scenario {
    let mut s = Scenario::reference(omega23, duration);
    s.grid = Grid1D::new(-0.1e-3, 0.3e-3, 1024, 5e-6, 0);
    s = s.with_duration(duration);
    s.atom_window = [0.05e-3, 0.2e-3];
    s.detector_x = 0.08e-3;
    s.snapshot_interval = 0.0;
    s
}

fn reversal_residual() -> f64 {
    let mut s = Scenario::reference(0.0, 0.0);
    s.physics.absorber_fraction = 0.0;
    let mut coeffs = Coefficients::from_scenario(&s);
    coeffs.absorber.iter_mut().for_each(|a| *a = 0.0);
    let x = coeffs.x.clone();
    let h = coeffs.dt;
    let mut prop = Propagator::from_coefficients(coeffs, Vec::new());
    let phi: Vec<C> = x.iter().map(|&xi| C::from_polar((-xi * xi / 150.0).exp(), 0.2 * xi)).collect();
    let mut state = prop.initial_state(phi.clone());
    state.psi2 = x
        .iter()
        .map(|&xi| C::from_polar((-(xi - 40.0).powi(2) / 30.0).exp(), -0.1 * xi))
        .collect();
    let psi = state.psi2.clone();
    prop.step_with_dt(&mut state, h).unwrap();
    prop.step_with_dt(&mut state, -h).unwrap();
    let err = |a: &[C], b: &[C]| a.iter().zip(b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
    err(&state.phi1, &phi).max(err(&state.psi2, &psi))
}

fn linearity_residual() -> f64 {
    let s = short_scenario(1.5e8, 2e-3);
    let amp = (1.0 / (units::C_LIGHT * 2e-3)).sqrt();
    let f = move |t: f64| C::new(amp * (1.0 + (3e3 * t).sin()), 0.0);
    let g = move |t: f64| C::from_polar(amp, 2e3 * t);
    let (a, b) = (C::new(0.7, -0.2), C::new(-1.3, 0.4));
    let inputs = vec![
        InputMode::Function(Arc::new(f)),
        InputMode::Function(Arc::new(g)),
        InputMode::Function(Arc::new(move |t| a * f(t) + b * g(t))),
    ];
    let mut prop = Propagator::new(&s, inputs);
    let opts = RunOptions {
        fluctuations: false,
        snapshots: false,
    };
    let (traj, _) = run_propagator(&s, &mut prop, opts).unwrap();
    let cols = &traj.final_state.columns;
    let scale = cols[2].f_psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (0..cols[0].f_psi.len())
        .map(|j| (a * cols[0].f_psi[j] + b * cols[1].f_psi[j] - cols[2].f_psi[j]).norm() / scale)
        .fold(0.0, f64::max)
}

fn final_beam(s: &Scenario) -> f64 {
    let opts = RunOptions {
        fluctuations: false,
        snapshots: false,
    };
    let traj = run_with(s, opts).unwrap();
    let st = &traj.final_state;
    grid_norm(&st.psi2, units::length_in(s.grid.dx())) + st.ledger.atoms_lost
}

fn property_suite(runs: &[&Simulated]) -> Verdict {
    let min_uncertainty = runs
        .iter()
        .flat_map(|r| r.series.iter())
        .map(|s| s.uncertainty_x.min(s.uncertainty_y))
        .fold(f64::INFINITY, f64::min);

    // vacuum input through the entangling run's recorded network
    let mut vacuum = runs[0].scenario.clone();
    vacuum.params.r = 0.0;
    let vac = summary_series(&runs[0].traj, &vacuum).unwrap();
    let vac_dev = vac
        .iter()
        .flat_map(|s| [s.v_x_plus, s.v_x_minus, s.v_y_plus, s.v_y_minus, s.product])
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);

    let mut ledger: f64 = 0.0;
    for r in runs {
        let n0 = r.traj.n_atoms;
        for l in &r.traj.ledger_samples {
            ledger = ledger.max(l.atom_residual(n0)).max(l.exchange_residual());
        }
        ledger = ledger.max(trajectory_commutator_norm(&r.traj, &r.scenario).max_residual());
    }

    let reversal = reversal_residual();
    let linearity = linearity_residual();

    let coarse = Scenario::reference(0.75e8, 0.04);
    let mut fine = coarse.clone();
    fine.grid.n_points *= 2;
    fine.grid.dt /= 2.0;
    fine = fine.with_duration(0.04);
    let (b0, b1) = (final_beam(&coarse), final_beam(&fine));
    let convergence = (b0 - b1).abs() / b1;

    let pass = min_uncertainty >= 1.0 - 1e-6
        && !vac.is_empty()
        && vac_dev <= 1e-3
        && ledger <= 1e-3
        && reversal <= 1e-9
        && linearity <= 1e-9
        && convergence < 1e-2;
    verdict(
        "property suite",
        pass,
        format!(
            "min uncertainty product {min_uncertainty:.6}, r=0 deviation {vac_dev:.1e}, \
             ledgers {ledger:.1e}, reversal {reversal:.1e}, linearity {linearity:.1e}, \
             refinement {:.3}%",
            convergence * 100.0
        ),
    )
}

fn parameter_relations() -> Verdict {
    let s = Scenario::reference(1.6e8, 0.0);
    let profile = ground_state(&s.params, &s.grid).unwrap();
    let rabi = optimal_rabi23(&s.params, &profile).unwrap();
    let feas = squeezed_flux_feasibility(2.0, 1e6);

    let mut cal = short_scenario(0.75e8, 5e-3);
    cal.physics.control_light_shift = false;
    cal.physics.probe_light_shift = false;
    cal.physics.condensate_index = false;
    let opts = CalibrationOptions {
        tolerance: 5.0,
        ..CalibrationOptions::default()
    };
    let delta2 = calibrate_two_photon_detuning(&cal, opts).unwrap();
    let p = &cal.params;
    let recoil = units::HBAR * (2.0 * p.k0).powi(2) / (2.0 * p.m);

    let ratio = rabi / 1.6e8;
    let pass = (0.5..=2.0).contains(&ratio)
        && (feas.n_photons - 13.15).abs() < 0.01
        && feas.feasible
        && (delta2 - recoil).abs() < 10.0
        && (recoil - 9.8e4).abs() < 0.01 * 9.8e4;
    verdict(
        "parameter relations",
        pass,
        format!(
            "optimal omega23 {rabi:.3e} ({ratio:.2}x), squeezed photons {:.3} feasible {}, \
             calibrated delta2 {delta2:.1} vs recoil {recoil:.1}",
            feas.n_photons, feas.feasible
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut verdicts = vec![oracle_exactness(), cross_module(), parameter_relations()];

    let mut trailing = Scenario::reference(1.5e8, 0.04);
    trailing.atom_window = [0.05e-3, 0.25e-3];
    let scenarios = vec![Scenario::reference(0.75e8, 0.04), Scenario::reference(1.5e8, 0.04), trailing];
    let runs: Vec<Simulated> = scenarios.into_par_iter().map(simulate).collect();

    verdicts.push(entanglement_point(&runs[0]));
    verdicts.push(state_transfer(&runs[1], &runs[2]));
    verdicts.push(beam_profile(&runs[1]));
    verdicts.push(property_suite(&[&runs[0], &runs[1], &runs[2]]));

    for v in &verdicts {
        println!("{}  {:<40} {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!(
        "acceptance: {} criteria, {failed} failed, {:.0} s",
        verdicts.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
