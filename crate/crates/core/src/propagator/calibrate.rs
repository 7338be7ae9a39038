//! Two-photon detuning calibration by maximising the outcoupled atom number.

use super::{grid_norm, run_with, RunOptions, Scenario};
use crate::error::{Error, Result};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Length of each trial run, s.
    pub duration: f64,
    /// Half-width of the scanned bracket around the analytic estimate, rad/s.
    /// `None` picks four Fourier widths of the trial run.
    pub half_width: Option<f64>,
    /// Final bracket width, rad/s.
    pub tolerance: f64,
    /// Points in the coarse scan that seeds the golden-section search.
    pub coarse_points: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            duration: 5e-3,
            half_width: None,
            tolerance: 1.0,
            coarse_points: 17,
        }
    }
}

fn outcoupled(scenario: &Scenario, delta2: f64, duration: f64) -> Result<f64> {
    let mut s = scenario.clone().with_duration(duration);
    s.params.delta2 = delta2;
    s.snapshot_interval = 0.0;
    s.eval_interval = duration;
    let traj = run_with(
        &s,
        RunOptions {
            fluctuations: false,
            snapshots: false,
        },
    )?;
    let dx = units::length_in(s.grid.dx());
    let st = &traj.final_state;
    Ok(grid_norm(&st.psi2, dx) + st.ledger.atoms_lost)
}

/// Returns the two-photon detuning (rad/s) that maximises the number of atoms
/// outcoupled during a short trial run.
pub fn calibrate_two_photon_detuning(scenario: &Scenario, opts: CalibrationOptions) -> Result<f64> {
    let center = scenario
        .params
        .resonance_estimate(scenario.physics.control_light_shift);
    let half = opts
        .half_width
        .unwrap_or(4.0 * 2.0 * std::f64::consts::PI / opts.duration);
    let m = opts.coarse_points.max(5);
    let grid: Vec<f64> = (0..m)
        .map(|i| center - half + 2.0 * half * i as f64 / (m - 1) as f64)
        .collect();
    let values = grid
        .iter()
        .map(|&d| outcoupled(scenario, d, opts.duration))
        .collect::<Result<Vec<f64>>>()?;
    let (best, &vmax) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(vmax > 0.0) || vmax - vmin <= 1e-9 * vmax {
        return Err(Error::Calibration(
            "outcoupled atom number does not depend on the detuning".into(),
        ));
    }
    if best == 0 || best == m - 1 {
        return Err(Error::Calibration(format!(
            "no interior maximum in [{:.4e}, {:.4e}] rad/s",
            grid[0],
            grid[m - 1]
        )));
    }

    // golden-section search on the bracketing cells
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = outcoupled(scenario, c, opts.duration)?;
    let mut fd = outcoupled(scenario, d, opts.duration)?;
    while (b - a).abs() > opts.tolerance {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = outcoupled(scenario, c, opts.duration)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = outcoupled(scenario, d, opts.duration)?;
        }
    }
    Ok(0.5 * (a + b))
}
