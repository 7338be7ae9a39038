//! Fast self-check suite behind `atomlight check`.

use num_complex::Complex64;
use std::time::Instant;

use crate::model::squeezed_flux_feasibility;
use crate::oracle::{beamsplitter_summary, two_mode_rabi, BeamSplitterCase};
use crate::propagator::{run_with, RunOptions, Scenario};
use crate::stats::{
    assemble_covariance_with_vacuum, epr_inferred, input_covariance, symplectic_eigenvalues,
    trajectory_commutator_norm, OutputModes,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Vacuum constant used by the covariance assembly; anything but 1 is a
    /// deliberate fault for exercising the suite.
    pub vacuum: f64,
    /// Length of the short propagation run, s.
    pub run_duration: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            vacuum: 1.0,
            run_duration: 2e-3,
        }
    }
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn reference_numbers() -> CheckResult {
    match beamsplitter_summary(&BeamSplitterCase { eta: 0.5, r: 2.0, theta_sq: 0.0 }) {
        Ok(s) => {
            let ok = (s.vinf_x_plus - 0.03596).abs() < 1e-3
                && (s.vinf_x_minus - 1.9643).abs() < 1e-3
                && (s.product - 0.0706).abs() < 1e-3;
            result(
                "beam-splitter reference values",
                ok,
                format!("Vinf(X+) {:.5}, Vinf(X-) {:.4}, product {:.5}", s.vinf_x_plus, s.vinf_x_minus, s.product),
            )
        }
        Err(e) => result("beam-splitter reference values", false, e.to_string()),
    }
}

fn cross_module(vacuum: f64) -> CheckResult {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        for j in 0..50 {
            let eta = i as f64 / 49.0;
            let r = 3.0 * j as f64 / 49.0;
            let modes = OutputModes::single(
                Complex64::new(eta.sqrt(), 0.0),
                Complex64::new((1.0 - eta).sqrt(), 0.0),
            );
            let a = epr_inferred(assemble_covariance_with_vacuum(&modes, &input_covariance(r, 0.0), vacuum));
            let b = beamsplitter_summary(&BeamSplitterCase { eta, r, theta_sq: 0.0 }).expect("valid case");
            for (ra, rb) in a.sigma.iter().zip(&b.sigma) {
                for (x, y) in ra.iter().zip(rb) {
                    worst = worst.max((x - y).abs());
                }
            }
            worst = worst.max((a.product - b.product).abs());
        }
    }
    result(
        "covariance assembly equals beam-splitter oracle",
        worst <= 1e-12,
        format!("max deviation {worst:.2e} over 50x50 (eta, r)"),
    )
}

fn vacuum_identity(vacuum: f64) -> CheckResult {
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let t = k as f64 / 19.0;
        let modes = OutputModes::single(
            Complex64::from_polar(t.sqrt(), 1.3 * k as f64),
            Complex64::from_polar((1.0 - t).sqrt(), -0.7 * k as f64),
        );
        let s = epr_inferred(assemble_covariance_with_vacuum(&modes, &input_covariance(0.0, 0.0), vacuum));
        worst = worst.max((s.product - 1.0).abs()).max((s.v_x_plus - 1.0).abs());
    }
    result("unsqueezed input stays vacuum", worst < 1e-12, format!("max deviation {worst:.2e}"))
}

fn physical_bounds() -> CheckResult {
    let mut worst = f64::INFINITY;
    for i in 0..50 {
        for j in 0..50 {
            let case = BeamSplitterCase {
                eta: i as f64 / 49.0,
                r: 3.0 * j as f64 / 49.0,
                theta_sq: 0.0,
            };
            let s = beamsplitter_summary(&case).expect("valid case");
            worst = worst
                .min(s.uncertainty_x)
                .min(s.uncertainty_y)
                .min(symplectic_eigenvalues(&s.sigma)[0]);
        }
    }
    result(
        "uncertainty and symplectic bounds",
        worst >= 1.0 - 1e-6,
        format!("smallest bound quantity {worst:.8}"),
    )
}

fn rabi() -> CheckResult {
    match two_mode_rabi(1.0, std::f64::consts::FRAC_PI_4) {
        Ok(t) => result(
            "two-mode Rabi closed form vs ODE",
            (t.eta - 0.5).abs() < 1e-12 && (t.eta - t.eta_numeric).abs() < 1e-9,
            format!("eta {:.12}, ode {:.12}", t.eta, t.eta_numeric),
        ),
        Err(e) => result("two-mode Rabi closed form vs ODE", false, e.to_string()),
    }
}

fn feasibility() -> CheckResult {
    let f = squeezed_flux_feasibility(2.0, 1e6);
    result(
        "squeezed photon number",
        (f.n_photons - 13.15).abs() < 0.01 && f.feasible,
        format!("{:.3} photons, feasible {}", f.n_photons, f.feasible),
    )
}

fn ledgers(duration: f64) -> CheckResult {
    let mut s = Scenario::reference(7.5e7, duration);
    s.snapshot_interval = 0.0;
    s.eval_interval = duration.max(1e-6);
    let traj = match run_with(&s, RunOptions { fluctuations: true, snapshots: false }) {
        Ok(t) => t,
        Err(e) => return result("norm ledgers on a short run", false, e.to_string()),
    };
    let atom = traj.ledger_samples.iter().map(|l| l.atom_residual(traj.n_atoms)).fold(0.0, f64::max);
    let exchange = traj.ledger_samples.iter().map(|l| l.exchange_residual()).fold(0.0, f64::max);
    let cn = trajectory_commutator_norm(&traj, &s);
    let column = cn.max_residual();
    let ok = atom < 1e-3 && exchange < 1e-3 && column < 1e-3 && (cn.aggregate_injected - 1.0).abs() < 1e-3;
    result(
        "norm ledgers on a short run",
        ok,
        format!(
            "atoms {atom:.1e}, exchange {exchange:.1e}, columns {column:.1e}, injected {:.6}",
            cn.aggregate_injected
        ),
    )
}

/// Runs every check in order.
pub fn run_checks(opts: CheckOptions) -> Vec<CheckResult> {
    vec![
        reference_numbers(),
        cross_module(opts.vacuum),
        vacuum_identity(opts.vacuum),
        physical_bounds(),
        rabi(),
        feasibility(),
        ledgers(opts.run_duration),
    ]
}

/// Prints the table and returns whether everything passed.
pub fn print_report(results: &[CheckResult], elapsed: f64) -> bool {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {:width$}  {}", r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} checks, {} failed, {:.1} s", results.len(), failed, elapsed);
    failed == 0
}

/// `check`: returns true when every check passes.
pub fn cmd_check(opts: CheckOptions, quiet: bool) -> bool {
    let start = Instant::now();
    let results = run_checks(opts);
    if quiet {
        results.iter().all(|r| r.passed)
    } else {
        print_report(&results, start.elapsed().as_secs_f64())
    }
}
