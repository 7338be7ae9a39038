use num_complex::Complex64;

/// Fluctuation column: the response of the system to one input temporal mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub f_psi: Vec<Complex64>,
    pub f_e: Vec<Complex64>,
}

/// Norm bookkeeping for one fluctuation column, in units of the input mode norm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ColumnLedger {
    pub injected: f64,
    pub emitted: f64,
    pub lost: f64,
}

/// Boundary fluxes accumulated over a run, in atoms or photons.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    pub atoms_lost: f64,
    pub photons_in: f64,
    pub photons_out: f64,
    pub columns: Vec<ColumnLedger>,
}

/// Probe amplitudes at the detector plane, averaged over each step.
///
/// `f_e` is stored row-major: `f_e[step * n_columns + column]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectorRecord {
    /// Step start times (internal units).
    pub t_start: Vec<f64>,
    /// Step lengths (internal units).
    pub dt: Vec<f64>,
    pub e_mean: Vec<Complex64>,
    pub f_e: Vec<Complex64>,
    pub n_columns: usize,
}

impl DetectorRecord {
    pub fn len(&self) -> usize {
        self.t_start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_start.is_empty()
    }

    pub fn column(&self, step: usize, column: usize) -> Complex64 {
        self.f_e[step * self.n_columns + column]
    }

    /// End of the recorded interval (internal units).
    pub fn t_end(&self) -> f64 {
        match (self.t_start.last(), self.dt.last()) {
            (Some(t), Some(h)) => t + h,
            _ => 0.0,
        }
    }
}

/// The full simulation state at one instant, in internal units
/// (µm, ms, ħ = 1; amplitudes in µm^(-1/2)).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub step: usize,
    pub phi1: Vec<Complex64>,
    pub psi2: Vec<Complex64>,
    pub e_mean: Vec<Complex64>,
    pub columns: Vec<Column>,
    pub ledger: Ledger,
    pub detector: DetectorRecord,
}

impl FieldState {
    pub fn zeros(n: usize, n_columns: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            t: 0.0,
            step: 0,
            phi1: z.clone(),
            psi2: z.clone(),
            e_mean: z.clone(),
            columns: (0..n_columns)
                .map(|_| Column {
                    f_psi: z.clone(),
                    f_e: z.clone(),
                })
                .collect(),
            ledger: Ledger {
                columns: vec![ColumnLedger::default(); n_columns],
                ..Ledger::default()
            },
            detector: DetectorRecord {
                n_columns,
                ..DetectorRecord::default()
            },
        }
    }

    pub fn n_points(&self) -> usize {
        self.phi1.len()
    }

    pub fn is_finite(&self) -> bool {
        let ok = |v: &[Complex64]| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        ok(&self.phi1)
            && ok(&self.psi2)
            && ok(&self.e_mean)
            && self.columns.iter().all(|c| ok(&c.f_psi) && ok(&c.f_e))
    }

    /// Equal-weight superposition of the columns, scaled by `weights`.
    pub fn combined_column(&self, weights: &[f64]) -> Column {
        let n = self.n_points();
        let mut f_psi = vec![Complex64::new(0.0, 0.0); n];
        let mut f_e = vec![Complex64::new(0.0, 0.0); n];
        for (col, &w) in self.columns.iter().zip(weights) {
            for j in 0..n {
                f_psi[j] += w * col.f_psi[j];
                f_e[j] += w * col.f_e[j];
            }
        }
        Column { f_psi, f_e }
    }
}

/// ∫|f|² dx on the grid.
pub fn grid_norm(f: &[Complex64], dx: f64) -> f64 {
    f.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx
}
