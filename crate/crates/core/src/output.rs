//! CSV and JSON writers.
//!
//! CSV files follow RFC 4180 with a header row; floats carry 17 significant
//! digits so they round-trip exactly.

use num_complex::Complex64;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::propagator::{DetectorRecord, LedgerSample, Snapshot};
use crate::stats::GaussianSummary;
use crate::units;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Writes a numeric table.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a table whose cells are already strings.
pub fn write_records(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

pub const SNAPSHOT_HEADER: &[&str] = &[
    "x [m]",
    "re_phi1 [m^-1/2]",
    "im_phi1 [m^-1/2]",
    "re_psi2 [m^-1/2]",
    "im_psi2 [m^-1/2]",
    "re_e_mean [m^-1/2]",
    "im_e_mean [m^-1/2]",
    "re_f_psi [m^-1/2]",
    "im_f_psi [m^-1/2]",
    "re_f_e [m^-1/2]",
    "im_f_e [m^-1/2]",
];

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..snap.x.len())
        .map(|j| {
            let mut row = vec![snap.x[j]];
            for f in [&snap.phi1, &snap.psi2, &snap.e_mean, &snap.f_psi, &snap.f_e] {
                row.push(f[j].re);
                row.push(f[j].im);
            }
            row
        })
        .collect();
    write_table(path, SNAPSHOT_HEADER, &rows)
}

/// Writes every snapshot as `snapshot_NNNN.csv` and returns the paths.
pub fn write_snapshots(dir: &Path, snaps: &[Snapshot]) -> Result<Vec<PathBuf>> {
    snaps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = dir.join(format!("snapshot_{i:04}.csv"));
            write_snapshot(&p, s).map(|_| p)
        })
        .collect()
}

pub const DETECTOR_HEADER: &[&str] = &[
    "t [s]",
    "re_e_mean [m^-1/2]",
    "im_e_mean [m^-1/2]",
    "re_f_e [m^-1/2]",
    "im_f_e [m^-1/2]",
];

/// Detector record, with the column field combined into the flat-top input mode.
pub fn write_detector(path: &Path, rec: &DetectorRecord, weights: &[f64]) -> Result<()> {
    let scale = 1.0 / units::LENGTH_UNIT.sqrt();
    let rows: Vec<Vec<f64>> = (0..rec.len())
        .map(|n| {
            let f: Complex64 = (0..rec.n_columns)
                .map(|c| rec.column(n, c) * weights.get(c).copied().unwrap_or(0.0))
                .sum();
            let e = rec.e_mean[n] * scale;
            let f = f * scale;
            let t = units::time_out(rec.t_start[n] + 0.5 * rec.dt[n]);
            vec![t, e.re, e.im, f.re, f.im]
        })
        .collect();
    write_table(path, DETECTOR_HEADER, &rows)
}

pub const SUMMARY_HEADER: &[&str] = &[
    "t [s]",
    "v_x_plus",
    "v_x_minus",
    "v_y_plus",
    "v_y_minus",
    "cov_plus",
    "cov_minus",
    "vinf_x_plus",
    "vinf_x_minus",
    "vinf_y_plus",
    "vinf_y_minus",
    "product",
    "product_y",
    "mean_x_plus",
    "mean_x_minus",
    "mean_y_plus",
    "mean_y_minus",
];

pub fn write_summary_series(path: &Path, series: &[GaussianSummary]) -> Result<()> {
    let rows: Vec<Vec<f64>> = series
        .iter()
        .map(|s| {
            vec![
                s.t,
                s.v_x_plus,
                s.v_x_minus,
                s.v_y_plus,
                s.v_y_minus,
                s.cov_plus,
                s.cov_minus,
                s.vinf_x_plus,
                s.vinf_x_minus,
                s.vinf_y_plus,
                s.vinf_y_minus,
                s.product,
                s.product_y,
                s.means[0],
                s.means[1],
                s.means[2],
                s.means[3],
            ]
        })
        .collect();
    write_table(path, SUMMARY_HEADER, &rows)
}

pub const LEDGER_HEADER: &[&str] = &[
    "t [s]",
    "condensate",
    "beam",
    "atoms_lost",
    "photons_in",
    "photons_out",
];

pub fn write_ledger(path: &Path, samples: &[LedgerSample]) -> Result<()> {
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| vec![s.t, s.condensate, s.beam, s.atoms_lost, s.photons_in, s.photons_out])
        .collect();
    write_table(path, LEDGER_HEADER, &rows)
}
