//! TOML run configuration.
//!
//! Every physical quantity is SI. Only `params.omega23`, `params.r` and
//! `run.duration` are required; everything else falls back to the reference
//! ⁸⁷Rb setup on the default grid.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{steps_for, Grid1D};
use crate::model::{PhysicalParams, ValidityConfig};
use crate::propagator::{CalibrationOptions, LoPhaseMode, OpticalLo, PhysicsToggles, Scenario};

/// How the two-photon detuning is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Delta2Setting {
    /// Explicit value, rad/s.
    Value(f64),
    Mode(Delta2Mode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delta2Mode {
    /// Recoil frequency minus the control light shift.
    Auto,
    /// Numerical search before the run.
    Calibrate,
}

impl Default for Delta2Setting {
    fn default() -> Self {
        Delta2Setting::Mode(Delta2Mode::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    /// rad/s
    pub omega23: f64,
    pub r: f64,
    /// kg
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// rad·s⁻¹·m^(1/2)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g13: Option<f64>,
    /// rad/s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// m⁻¹
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
    /// m⁻¹
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kp: Option<f64>,
    /// rad/s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_trap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_atoms: Option<f64>,
    /// s⁻¹
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_flux: Option<f64>,
    /// rad
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_sq: Option<f64>,
    /// rad/s, or "auto" / "calibrate"
    #[serde(default)]
    pub delta2: Delta2Setting,
    /// rad/s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// m
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    /// m
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    /// s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// s
    pub duration: f64,
    /// m
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_window: Option<[f64; 2]>,
    /// m
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_x: Option<f64>,
    /// m⁻¹, in the frame moving with the outcoupled atoms
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_wavenumber: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_phase: Option<LoPhaseMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optical_lo: Option<OpticalLo>,
    /// s; defaults to the duration
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_window: Option<f64>,
    /// s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_width: Option<f64>,
    /// s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_interval: Option<f64>,
    /// s; 0 keeps only the first and last snapshot
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_interval: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    /// s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// rad/s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// rad/s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coarse_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Reserved; the dynamics are deterministic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plots: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Full simulations.
    #[default]
    Simulation,
    /// Closed-form beam splitter; axes may be `eta` and `r`.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub mode: SweepMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<String>>,
    #[serde(default, rename = "axis")]
    pub axes: Vec<SweepAxis>,
}

/// Parameters a simulation sweep may vary.
pub const SIMULATION_AXES: &[&str] = &[
    "omega23",
    "r",
    "theta_sq",
    "delta",
    "delta2",
    "g13",
    "omega_trap",
    "n_atoms",
    "probe_flux",
    "duration",
];

/// Parameters an oracle sweep may vary.
pub const ORACLE_AXES: &[&str] = &["eta", "r", "theta_sq"];

/// Metrics a sweep may report.
pub const METRICS: &[&str] = &[
    "min_product",
    "min_product_time",
    "vinf_x_plus_at_min",
    "vinf_x_minus_at_min",
    "min_v_x_plus",
    "final_v_x_plus",
    "final_v_y_plus",
    "outcoupled_fraction",
];

pub const DEFAULT_METRICS: &[&str] = &[
    "min_product",
    "vinf_x_plus_at_min",
    "vinf_x_minus_at_min",
    "min_v_x_plus",
    "final_v_y_plus",
    "outcoupled_fraction",
];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsSection,
    #[serde(default)]
    pub grid: GridSection,
    pub run: RunSection,
    #[serde(default)]
    pub physics: PhysicsToggles,
    #[serde(default)]
    pub validity: ValidityConfig,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serialises a configuration back to TOML.
pub fn emit(cfg: &RunConfig) -> Result<String> {
    toml::to_string_pretty(cfg).map_err(|e| Error::Config(e.to_string()))
}

impl RunConfig {
    /// Checks the configuration, including the physical validity guards of the
    /// resolved scenario.
    pub fn validate(&self) -> Result<()> {
        if let Some(sweep) = &self.sweep {
            let allowed = match sweep.mode {
                SweepMode::Simulation => SIMULATION_AXES,
                SweepMode::Oracle => ORACLE_AXES,
            };
            for axis in &sweep.axes {
                if !allowed.contains(&axis.name.as_str()) {
                    return Err(Error::validation(
                        format!("sweep.axis.{}", axis.name),
                        format!("unknown parameter; expected one of {allowed:?}"),
                    ));
                }
                if axis.values.is_empty() {
                    return Err(Error::validation(
                        format!("sweep.axis.{}", axis.name),
                        "value list is empty",
                    ));
                }
            }
            if let Some(metrics) = &sweep.metrics {
                for m in metrics {
                    if !METRICS.contains(&m.as_str()) {
                        return Err(Error::validation(
                            "sweep.metrics",
                            format!("unknown metric `{m}`; expected one of {METRICS:?}"),
                        ));
                    }
                }
            }
        }
        if self.output.workers == Some(0) {
            return Err(Error::validation("output.workers", "must be at least 1"));
        }
        self.scenario()?.validate()
    }

    /// Physical parameters with defaults filled in. With `delta2 = "calibrate"`
    /// this holds the analytic estimate.
    pub fn physical_params(&self) -> PhysicalParams {
        let p = &self.params;
        let mut out = PhysicalParams::reference(p.omega23);
        out.r = p.r;
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut out.m, p.m);
        set(&mut out.g13, p.g13);
        set(&mut out.delta, p.delta);
        set(&mut out.omega_trap, p.omega_trap);
        set(&mut out.n_atoms, p.n_atoms);
        set(&mut out.probe_flux, p.probe_flux);
        set(&mut out.theta_sq, p.theta_sq);
        set(&mut out.omega0, p.omega0);
        if let Some(k0) = p.k0 {
            out.k0 = k0;
            out.kp = -k0;
        }
        set(&mut out.kp, p.kp);
        out.delta2 = match p.delta2 {
            Delta2Setting::Value(v) => v,
            Delta2Setting::Mode(_) => out.resonance_estimate(self.physics.control_light_shift),
        };
        out
    }

    pub fn needs_calibration(&self) -> bool {
        self.params.delta2 == Delta2Setting::Mode(Delta2Mode::Calibrate)
    }

    pub fn grid(&self) -> Grid1D {
        let d = Grid1D::default_for_duration(self.run.duration);
        let g = &self.grid;
        let dt = g.dt.unwrap_or(d.dt);
        Grid1D::new(
            g.x_min.unwrap_or(d.x_min),
            g.x_max.unwrap_or(d.x_max),
            g.n_points.unwrap_or(d.n_points),
            dt,
            steps_for(self.run.duration, dt),
        )
    }

    /// The scenario described by this configuration (δ2 not yet calibrated).
    pub fn scenario(&self) -> Result<Scenario> {
        let run = &self.run;
        if !(run.duration >= 0.0 && run.duration.is_finite()) {
            return Err(Error::validation("run.duration", "must be finite and non-negative"));
        }
        let mut s = Scenario::reference(self.params.omega23, run.duration);
        s.params = self.physical_params();
        s.grid = self.grid();
        s.physics = self.physics;
        s.validity = self.validity;
        if let Some(w) = run.atom_window {
            s.atom_window = w;
        }
        if let Some(x) = run.detector_x {
            s.detector_x = x;
        }
        if let Some(k) = run.lo_wavenumber {
            s.lo_wavenumber = k;
        }
        if let Some(m) = run.lo_phase {
            s.lo_phase = m;
        }
        if let Some(m) = run.optical_lo {
            s.optical_lo = m;
        }
        if let Some(t) = run.input_window {
            s.input_window = t;
        }
        if let Some(w) = run.slot_width {
            s.slot_width = w;
        }
        if let Some(e) = run.eval_interval {
            s.eval_interval = e;
        }
        if let Some(i) = run.snapshot_interval {
            s.snapshot_interval = i;
        }
        Ok(s)
    }

    pub fn calibration_options(&self) -> CalibrationOptions {
        let d = CalibrationOptions::default();
        let c = &self.calibration;
        CalibrationOptions {
            duration: c.duration.unwrap_or(d.duration),
            half_width: c.half_width.or(d.half_width),
            tolerance: c.tolerance.unwrap_or(d.tolerance),
            coarse_points: c.coarse_points.unwrap_or(d.coarse_points),
        }
    }

    /// Copy with one named parameter replaced (used by sweeps).
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<RunConfig> {
        let mut c = self.clone();
        let p = &mut c.params;
        match name {
            "omega23" => p.omega23 = value,
            "r" => p.r = value,
            "theta_sq" => p.theta_sq = Some(value),
            "delta" => p.delta = Some(value),
            "delta2" => p.delta2 = Delta2Setting::Value(value),
            "g13" => p.g13 = Some(value),
            "omega_trap" => p.omega_trap = Some(value),
            "n_atoms" => p.n_atoms = Some(value),
            "probe_flux" => p.probe_flux = Some(value),
            "duration" => c.run.duration = value,
            other => {
                return Err(Error::validation(
                    format!("sweep.axis.{other}"),
                    "not a sweepable parameter",
                ))
            }
        }
        Ok(c)
    }
}
