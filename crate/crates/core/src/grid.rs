//! Uniform periodic spatial grid and time step.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::HBAR;

/// Spatial grid plus integration step, in SI units.
///
/// Points sit at `x_min + j·dx` for `j = 0..n_points`; the domain is treated
/// as periodic by the spectral kinetic operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub dt: f64,
    pub n_steps: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize, dt: f64, n_steps: usize) -> Self {
        Self {
            x_min,
            x_max,
            n_points,
            dt,
            n_steps,
        }
    }

    /// Default grid: [-0.25, 1.25] mm, 4096 points, 5 µs steps.
    pub fn default_for_duration(duration: f64) -> Self {
        let dt = 5e-6;
        Self::new(-0.25e-3, 1.25e-3, 4096, dt, steps_for(duration, dt))
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Largest kinetic frequency ħ(π/dx)²/(2m) the grid can represent, rad/s.
    pub fn max_kinetic_frequency(&self, mass: f64) -> f64 {
        let kmax = PI / self.dx();
        HBAR * kmax * kmax / (2.0 * mass)
    }

    /// Checks the discretisation contract for atoms of mass `mass`.
    pub fn validate(&self, mass: f64) -> Result<()> {
        if !(self.x_max > self.x_min) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::validation("grid.x_max", "x_max must exceed x_min"));
        }
        if self.n_points < 4 || !self.n_points.is_power_of_two() {
            return Err(Error::validation(
                "grid.n_points",
                format!("{} is not a power of two >= 4", self.n_points),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(Error::validation("grid.dt", "time step must be positive"));
        }
        let guard = self.dt * self.max_kinetic_frequency(mass);
        if guard >= 0.5 {
            return Err(Error::validation(
                "grid.dt",
                format!("dt·ω_kmax = {guard:.3} violates the kinetic stability bound 0.5"),
            ));
        }
        Ok(())
    }

    /// Index of the grid point closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let j = ((x - self.x_min) / self.dx()).round();
        j.clamp(0.0, (self.n_points - 1) as f64) as usize
    }
}

/// Number of whole steps of length `dt` covering `duration`.
pub fn steps_for(duration: f64, dt: f64) -> usize {
    if duration <= 0.0 {
        0
    } else {
        (duration / dt).round() as usize
    }
}

/// Angular wavenumbers in FFT order for `n` points spaced by `dx`.
pub fn fft_wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * dx);
    (0..n)
        .map(|j| {
            let m = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
            m as f64 * dk
        })
        .collect()
}
