//! Command implementations behind the `atomlight` binary.

use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{emit, RunConfig, SweepMode, DEFAULT_METRICS};
use crate::error::{Error, Result};
use crate::oracle::{beamsplitter_summary, BeamSplitterCase};
use crate::output::{
    ensure_dir, write_detector, write_json, write_ledger, write_records, write_snapshots,
    write_summary_series,
};
use crate::propagator::{
    calibrate_two_photon_detuning, run_partial, RunOptions, Scenario, Snapshot, Trajectory,
};
use crate::stats::{
    min_eigenvalue, output_overlaps, summary_series, symplectic_eigenvalues,
    trajectory_commutator_norm, GaussianSummary,
};
use crate::svg::{Plot, Series};

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "ATOMLIGHT_OUT";

/// Options shared by every command.
#[derive(Debug, Clone, Default)]
pub struct CommandOptions {
    /// Output directory from the command line (highest precedence).
    pub out: Option<PathBuf>,
    /// Number of evenly spaced snapshots after the initial one.
    pub snapshots: Option<usize>,
    pub workers: Option<usize>,
    pub quiet: bool,
}

/// Output directory: command line, then environment, then config, then `./atomlight-out`.
pub fn resolve_out_dir(opts: &CommandOptions, cfg: Option<&RunConfig>) -> PathBuf {
    if let Some(p) = &opts.out {
        return p.clone();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.and_then(|c| c.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("atomlight-out"))
}

/// Final and extremal metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    /// "ok" or "integration-failure".
    pub status: String,
    pub error: Option<String>,
    pub scenario: Scenario,
    /// δ2 found by calibration, rad/s.
    pub calibrated_delta2: Option<f64>,
    pub n_samples: usize,
    pub min_product: Option<f64>,
    pub min_product_time: Option<f64>,
    pub vinf_x_plus_at_min: Option<f64>,
    pub vinf_x_minus_at_min: Option<f64>,
    pub min_product_y: Option<f64>,
    pub min_v_x_plus: Option<f64>,
    pub min_v_x_plus_time: Option<f64>,
    pub final_v_x_plus: Option<f64>,
    pub final_v_x_minus: Option<f64>,
    pub final_v_y_plus: Option<f64>,
    pub final_v_y_minus: Option<f64>,
    pub entangled: bool,
    /// Smallest V(X⁺)V(X⁻) or V(Y⁺)V(Y⁻) over all samples.
    pub min_uncertainty_product: Option<f64>,
    pub min_symplectic_eigenvalue: Option<f64>,
    pub min_covariance_eigenvalue: Option<f64>,
    /// Largest |α_ψ|² + |α_E|² of any input mode at any sample.
    pub max_input_share: Option<f64>,
    /// (beam + absorbed atoms) / initial atom number at the end.
    pub outcoupled_fraction: f64,
    pub absorbed_fraction: f64,
    /// Set when more than 10⁻³ of the atoms reached the absorbing edges.
    pub absorber_warning: bool,
    pub max_atom_residual: f64,
    pub max_exchange_residual: f64,
    /// Norm of the flat-top input mode found in the system, and injected.
    pub commutator_norm: f64,
    pub commutator_injected: f64,
    pub commutator_atomic: f64,
    pub max_column_residual: f64,
}

impl RunSummary {
    /// Value of a named sweep metric.
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "min_product" => self.min_product,
            "min_product_time" => self.min_product_time,
            "vinf_x_plus_at_min" => self.vinf_x_plus_at_min,
            "vinf_x_minus_at_min" => self.vinf_x_minus_at_min,
            "min_v_x_plus" => self.min_v_x_plus,
            "final_v_x_plus" => self.final_v_x_plus,
            "final_v_y_plus" => self.final_v_y_plus,
            "outcoupled_fraction" => Some(self.outcoupled_fraction),
            _ => None,
        }
    }
}

/// Everything produced by one simulation.
pub struct RunResult {
    pub summary: RunSummary,
    pub series: Vec<GaussianSummary>,
    pub trajectory: Trajectory,
    pub failure: Option<Error>,
}

fn argmin<T>(items: &[T], key: impl Fn(&T) -> f64) -> Option<&T> {
    items.iter().min_by(|a, b| key(a).total_cmp(&key(b)))
}

/// Resolves the scenario (calibrating δ2 if requested) and integrates it.
pub fn simulate(cfg: &RunConfig, snapshots: Option<usize>) -> Result<RunResult> {
    let mut scenario = cfg.scenario()?;
    if let Some(n) = snapshots {
        scenario.snapshot_interval = if n == 0 {
            0.0
        } else {
            scenario.duration / n as f64
        };
    }
    let calibrated = if cfg.needs_calibration() {
        let d = calibrate_two_photon_detuning(&scenario, cfg.calibration_options())?;
        scenario.params.delta2 = d;
        Some(d)
    } else {
        None
    };
    let (trajectory, failure) = run_partial(&scenario, RunOptions::default())?;
    let series = summary_series(&trajectory, &scenario)?;
    let summary = summarize(&scenario, calibrated, &trajectory, &series, failure.as_ref())?;
    Ok(RunResult {
        summary,
        series,
        trajectory,
        failure,
    })
}

pub fn summarize(
    scenario: &Scenario,
    calibrated: Option<f64>,
    traj: &Trajectory,
    series: &[GaussianSummary],
    failure: Option<&Error>,
) -> Result<RunSummary> {
    let at_min = argmin(series, |s| s.product);
    let min_vx = argmin(series, |s| s.v_x_plus);
    let last = series.last();
    let fold_min = |it: &mut dyn Iterator<Item = f64>| -> Option<f64> {
        it.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    };
    let modes = output_overlaps(traj, scenario)?;
    let n0 = traj.n_atoms;
    let end = traj.ledger_at_end();
    let (beam, lost) = end.map_or((0.0, 0.0), |l| (l.beam, l.atoms_lost));
    let cn = trajectory_commutator_norm(traj, scenario);
    Ok(RunSummary {
        status: if failure.is_some() {
            "integration-failure".into()
        } else {
            "ok".into()
        },
        error: failure.map(|e| e.to_string()),
        scenario: scenario.clone(),
        calibrated_delta2: calibrated,
        n_samples: series.len(),
        min_product: at_min.map(|s| s.product),
        min_product_time: at_min.map(|s| s.t),
        vinf_x_plus_at_min: at_min.map(|s| s.vinf_x_plus),
        vinf_x_minus_at_min: at_min.map(|s| s.vinf_x_minus),
        min_product_y: fold_min(&mut series.iter().map(|s| s.product_y)),
        min_v_x_plus: min_vx.map(|s| s.v_x_plus),
        min_v_x_plus_time: min_vx.map(|s| s.t),
        final_v_x_plus: last.map(|s| s.v_x_plus),
        final_v_x_minus: last.map(|s| s.v_x_minus),
        final_v_y_plus: last.map(|s| s.v_y_plus),
        final_v_y_minus: last.map(|s| s.v_y_minus),
        entangled: series.iter().any(|s| s.entangled),
        min_uncertainty_product: fold_min(
            &mut series.iter().map(|s| s.uncertainty_x.min(s.uncertainty_y)),
        ),
        min_symplectic_eigenvalue: fold_min(
            &mut series.iter().map(|s| symplectic_eigenvalues(&s.sigma)[0]),
        ),
        min_covariance_eigenvalue: fold_min(&mut series.iter().map(|s| min_eigenvalue(&s.sigma))),
        max_input_share: modes
            .iter()
            .map(|m| m.max_input_share())
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v)))),
        outcoupled_fraction: if n0 > 0.0 { (beam + lost) / n0 } else { 0.0 },
        absorbed_fraction: if n0 > 0.0 { lost / n0 } else { 0.0 },
        absorber_warning: lost > 1e-3 * n0,
        max_atom_residual: traj
            .ledger_samples
            .iter()
            .map(|l| l.atom_residual(n0))
            .fold(0.0, f64::max),
        max_exchange_residual: traj
            .ledger_samples
            .iter()
            .map(|l| l.exchange_residual())
            .fold(0.0, f64::max),
        commutator_norm: cn.aggregate,
        commutator_injected: cn.aggregate_injected,
        commutator_atomic: cn.aggregate_atomic,
        max_column_residual: cn.max_residual(),
    })
}

#[derive(Debug, Clone, Serialize)]
struct Timing {
    wall_seconds: f64,
}

fn density_plot(snap: &Snapshot, scenario: &Scenario) -> Plot {
    let p = &scenario.params;
    let light_scale = p.m * crate::units::C_LIGHT / (crate::units::HBAR * p.kick_wavenumber());
    let mm = |x: f64| x * 1e3;
    let curve = |f: &[num_complex::Complex64], scale: f64| -> Vec<(f64, f64)> {
        snap.x
            .iter()
            .zip(f)
            .map(|(&x, v)| (mm(x), scale * v.norm_sqr() * 1e-3))
            .collect()
    };
    let mut plot = Plot::new(
        &format!("Densities at t = {:.1} ms", snap.t * 1e3),
        "x [mm]",
        "density [1/mm]",
    );
    plot.series.push(Series::line("condensate", curve(&snap.phi1, 1.0)));
    plot.series.push(Series::line("beam x100", curve(&snap.psi2, 100.0)));
    plot.series.push(Series::line("light x mc/2hk0", curve(&snap.e_mean, light_scale)));
    plot
}

fn variance_plot(series: &[GaussianSummary], r: f64) -> Plot {
    let mut plot = Plot::new("Amplitude quadrature variances", "t [ms]", "variance");
    let pts = |f: &dyn Fn(&GaussianSummary) -> f64| -> Vec<(f64, f64)> {
        series.iter().map(|s| (s.t * 1e3, f(s))).collect()
    };
    plot.series.push(Series::line("V(X+) atoms", pts(&|s| s.v_x_plus)));
    plot.series.push(Series::line("V(Y+) light", pts(&|s| s.v_y_plus)));
    plot.guides.push((1.0, "vacuum".into()));
    plot.guides.push(((-2.0 * r).exp(), "input".into()));
    plot.log_y = true;
    plot
}

fn product_plot(series: &[GaussianSummary]) -> Plot {
    let mut plot = Plot::new("EPR inferred variance products", "t [ms]", "product");
    let pts = |f: &dyn Fn(&GaussianSummary) -> f64| -> Vec<(f64, f64)> {
        series.iter().map(|s| (s.t * 1e3, f(s))).collect()
    };
    plot.series.push(Series::line("Vinf(X+)Vinf(X-)", pts(&|s| s.product)));
    plot.series.push(Series::line("Vinf(Y+)Vinf(Y-)", pts(&|s| s.product_y)));
    plot.guides.push((1.0, "separable bound".into()));
    plot.log_y = true;
    plot
}

/// Writes all artifacts of a finished (or partially finished) run.
pub fn write_run(dir: &Path, cfg: &RunConfig, result: &RunResult) -> Result<()> {
    ensure_dir(dir)?;
    let snap_dir = dir.join("snapshots");
    ensure_dir(&snap_dir)?;
    let traj = &result.trajectory;
    let scenario = &result.summary.scenario;
    write_snapshots(&snap_dir, &traj.snapshots)?;
    write_detector(&dir.join("detector.csv"), &traj.detector, &traj.aggregate_weights)?;
    write_summary_series(&dir.join("summary.csv"), &result.series)?;
    write_ledger(&dir.join("ledger.csv"), &traj.ledger_samples)?;
    write_json(&dir.join("summary.json"), &result.summary)?;
    std::fs::write(dir.join("config.toml"), emit(cfg)?)?;
    if cfg.output.plots.unwrap_or(true) {
        if let Some(last) = traj.snapshots.last() {
            density_plot(last, scenario).write(&dir.join("density.svg"))?;
        }
        variance_plot(&result.series, scenario.params.r).write(&dir.join("variances.svg"))?;
        product_plot(&result.series).write(&dir.join("products.svg"))?;
    }
    Ok(())
}

/// `run <config>`.
pub fn cmd_run(cfg: &RunConfig, opts: &CommandOptions) -> Result<RunSummary> {
    let dir = resolve_out_dir(opts, Some(cfg));
    let start = Instant::now();
    let result = simulate(cfg, opts.snapshots)?;
    write_run(&dir, cfg, &result)?;
    write_json(
        &dir.join("timing.json"),
        &Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    )?;
    if !opts.quiet {
        report_run(&result.summary, &dir);
    }
    match result.failure {
        Some(e) => Err(e),
        None => Ok(result.summary),
    }
}

fn show(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.5}"))
}

fn report_run(s: &RunSummary, dir: &Path) {
    println!("status               {}", s.status);
    println!("samples              {}", s.n_samples);
    println!("min Vinf product     {}", show(s.min_product));
    println!("  Vinf(X+) at min    {}", show(s.vinf_x_plus_at_min));
    println!("  Vinf(X-) at min    {}", show(s.vinf_x_minus_at_min));
    println!("min V(X+)            {}", show(s.min_v_x_plus));
    println!("final V(Y+)          {}", show(s.final_v_y_plus));
    println!("outcoupled fraction  {:.5}", s.outcoupled_fraction);
    println!("commutator norm      {:.6} (injected {:.6})", s.commutator_norm, s.commutator_injected);
    println!("outputs in           {}", dir.display());
}

/// One sweep point: axis values plus either a summary or an error.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub values: Vec<f64>,
    pub outcome: std::result::Result<Vec<Option<f64>>, String>,
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

fn oracle_metrics(cfg: &RunConfig, names: &[String], values: &[f64], metrics: &[String]) -> Result<Vec<Option<f64>>> {
    let mut case = BeamSplitterCase {
        eta: 0.5,
        r: cfg.params.r,
        theta_sq: cfg.params.theta_sq.unwrap_or(0.0),
    };
    for (n, v) in names.iter().zip(values) {
        match n.as_str() {
            "eta" => case.eta = *v,
            "r" => case.r = *v,
            "theta_sq" => case.theta_sq = *v,
            other => return Err(Error::validation(format!("sweep.axis.{other}"), "not an oracle parameter")),
        }
    }
    let s = beamsplitter_summary(&case)?;
    Ok(metrics
        .iter()
        .map(|m| match m.as_str() {
            "min_product" => Some(s.product),
            "vinf_x_plus_at_min" => Some(s.vinf_x_plus),
            "vinf_x_minus_at_min" => Some(s.vinf_x_minus),
            "min_v_x_plus" | "final_v_x_plus" => Some(s.v_x_plus),
            "final_v_y_plus" => Some(s.v_y_plus),
            "outcoupled_fraction" => Some(case.eta),
            _ => None,
        })
        .collect())
}

/// Runs every point of the sweep; failures are kept per point.
pub fn run_sweep(cfg: &RunConfig, workers: Option<usize>) -> Result<(Vec<String>, Vec<String>, Vec<SweepPoint>)> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::validation("sweep", "no [sweep] section"))?;
    if sweep.axes.is_empty() {
        return Err(Error::validation("sweep.axis", "at least one sweep axis is required"));
    }
    let names: Vec<String> = sweep.axes.iter().map(|a| a.name.clone()).collect();
    let metrics: Vec<String> = sweep
        .metrics
        .clone()
        .unwrap_or_else(|| DEFAULT_METRICS.iter().map(|s| s.to_string()).collect());
    let points = cartesian(&sweep.axes.iter().map(|a| a.values.clone()).collect::<Vec<_>>());
    let eval = |values: &Vec<f64>| -> SweepPoint {
        let outcome = match sweep.mode {
            SweepMode::Oracle => oracle_metrics(cfg, &names, values, &metrics),
            SweepMode::Simulation => names
                .iter()
                .zip(values)
                .try_fold(cfg.clone(), |c, (n, v)| c.with_parameter(n, *v))
                .and_then(|c| {
                    c.scenario()?.validate()?;
                    let r = simulate(&c, Some(0))?;
                    match r.failure {
                        Some(e) => Err(e),
                        None => Ok(metrics.iter().map(|m| r.summary.metric(m)).collect()),
                    }
                }),
        };
        SweepPoint {
            values: values.clone(),
            outcome: outcome.map_err(|e| e.to_string()),
        }
    };
    let n_workers = workers
        .or(cfg.output.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n_workers)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let results = pool.install(|| points.par_iter().map(eval).collect::<Vec<_>>());
    Ok((names, metrics, results))
}

/// `sweep <config>`: long-format CSV with one row per point and metric.
pub fn cmd_sweep(cfg: &RunConfig, opts: &CommandOptions) -> Result<Vec<SweepPoint>> {
    let dir = resolve_out_dir(opts, Some(cfg));
    let (names, metrics, points) = run_sweep(cfg, opts.workers)?;
    ensure_dir(&dir)?;
    let mut header: Vec<&str> = vec!["run"];
    header.extend(names.iter().map(String::as_str));
    header.extend(["metric", "value", "status", "message"]);
    let mut rows = Vec::new();
    for (i, p) in points.iter().enumerate() {
        for (k, m) in metrics.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(p.values.iter().map(|v| crate::output::fmt_f64(*v)));
            row.push(m.clone());
            match &p.outcome {
                Ok(vals) => {
                    row.push(vals[k].map(crate::output::fmt_f64).unwrap_or_default());
                    row.push("ok".into());
                    row.push(String::new());
                }
                Err(e) => {
                    row.push(String::new());
                    row.push("failed".into());
                    row.push(e.clone());
                }
            }
            rows.push(row);
        }
    }
    write_records(&dir.join("sweep.csv"), &header, &rows)?;
    std::fs::write(dir.join("config.toml"), emit(cfg)?)?;

    if let Some(k) = metrics.iter().position(|m| m == "min_product") {
        let mut plot = Plot::new("Minimum EPR product", &names[0], "min Vinf(X+)Vinf(X-)");
        let pts: Vec<(f64, f64)> = points
            .iter()
            .filter_map(|p| match &p.outcome {
                Ok(v) => v[k].map(|y| (p.values[0], y)),
                Err(_) => None,
            })
            .collect();
        plot.series.push(Series::scatter("runs", pts));
        plot.guides.push((1.0, "separable bound".into()));
        if cfg.sweep.as_ref().is_some_and(|s| s.mode == SweepMode::Oracle)
            && names.len() == 1
            && names[0] == "r"
        {
            let closed: Vec<(f64, f64)> = points
                .iter()
                .map(|p| {
                    let x = (2.0 * p.values[0]).exp();
                    (p.values[0], 4.0 / (2.0 + x + 1.0 / x))
                })
                .collect();
            plot.series.push(Series::line("4/(2+e^2r+e^-2r)", closed));
        }
        plot.write(&dir.join("sweep.svg"))?;
    }
    if !opts.quiet {
        let failed = points.iter().filter(|p| p.outcome.is_err()).count();
        println!(
            "{} runs, {} failed; results in {}",
            points.len(),
            failed,
            dir.join("sweep.csv").display()
        );
    }
    Ok(points)
}

/// `calibrate <config>`.
pub fn cmd_calibrate(cfg: &RunConfig, opts: &CommandOptions) -> Result<f64> {
    let scenario = cfg.scenario()?;
    let estimate = scenario.params.resonance_estimate(scenario.physics.control_light_shift);
    let d = calibrate_two_photon_detuning(&scenario, cfg.calibration_options())?;
    let dir = resolve_out_dir(opts, Some(cfg));
    ensure_dir(&dir)?;
    #[derive(Serialize)]
    struct Calibration {
        delta2: f64,
        analytic_estimate: f64,
        duration: f64,
        tolerance: f64,
    }
    let o = cfg.calibration_options();
    write_json(
        &dir.join("calibration.json"),
        &Calibration {
            delta2: d,
            analytic_estimate: estimate,
            duration: o.duration,
            tolerance: o.tolerance,
        },
    )?;
    if !opts.quiet {
        println!("delta2 = {d:.6e} rad/s (analytic estimate {estimate:.6e} rad/s)");
    }
    Ok(d)
}

/// `oracle --eta --r`.
pub fn cmd_oracle(eta: f64, r: f64, theta_sq: f64, opts: &CommandOptions) -> Result<GaussianSummary> {
    let s = beamsplitter_summary(&BeamSplitterCase { eta, r, theta_sq })?;
    if !opts.quiet {
        println!("V(X+)       {:.6}", s.v_x_plus);
        println!("V(X-)       {:.6}", s.v_x_minus);
        println!("V(Y+)       {:.6}", s.v_y_plus);
        println!("V(Y-)       {:.6}", s.v_y_minus);
        println!("Cov(X+,Y+)  {:.6}", s.cov_plus);
        println!("Cov(X-,Y-)  {:.6}", s.cov_minus);
        println!("Vinf(X+)    {:.6}", s.vinf_x_plus);
        println!("Vinf(X-)    {:.6}", s.vinf_x_minus);
        println!("product     {:.6}", s.product);
        println!("entangled   {}", s.entangled);
    }
    Ok(s)
}
