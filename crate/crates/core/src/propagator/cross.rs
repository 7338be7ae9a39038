//! Quasi-static optical cross-propagation.
//!
//! Within one atomic time step the probe field is solved along x from its
//! inflow boundary:
//!
//! ```text
//! c ∂x E = i [δ_frame + (|g13|²/Δ)|φ1|²] E + i G* φ1* ψ
//! ```
//!
//! with G = g13 Ω23*/Δ, using the implicit midpoint rule cell by cell. The
//! homogeneous part is a Cayley map, so |E| is preserved exactly when the
//! source vanishes.

use num_complex::Complex64;

/// Internal-unit coefficients of the light equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightMedium {
    /// Grid spacing.
    pub dx: f64,
    /// Speed of light.
    pub c: f64,
    /// Dispersive coefficient |g13|²/Δ multiplying |φ1|² (0 disables the index).
    pub index_coeff: f64,
    /// Residual rotating-frame detuning of the light.
    pub frame_detuning: f64,
    /// Raman coupling G = g13 Ω23/Δ (real).
    pub coupling: f64,
}

/// Per-cell transfer coefficients: `E[j+1] = a[j] E[j] + b[j] (ψ[j] + ψ[j+1]) / 2`.
#[derive(Debug, Clone, Default)]
pub struct CrossCoefficients {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl CrossCoefficients {
    pub fn new(n: usize) -> Self {
        Self {
            a: vec![Complex64::new(1.0, 0.0); n.saturating_sub(1)],
            b: vec![Complex64::new(0.0, 0.0); n.saturating_sub(1)],
        }
    }

    /// Recomputes the coefficients for condensate `phi1`.
    pub fn update(&mut self, phi1: &[Complex64], medium: &LightMedium) {
        let n = phi1.len();
        if self.a.len() + 1 != n {
            *self = Self::new(n);
        }
        let hx = medium.dx / medium.c;
        let i = Complex64::i();
        for j in 0..n - 1 {
            let p0 = phi1[j];
            let p1 = phi1[j + 1];
            let shift =
                medium.frame_detuning + medium.index_coeff * 0.5 * (p0.norm_sqr() + p1.norm_sqr());
            let sigma = 0.5 * hx * shift;
            let den = Complex64::new(1.0, -sigma);
            self.a[j] = Complex64::new(1.0, sigma) / den;
            self.b[j] = i * hx * medium.coupling * (0.5 * (p0 + p1)).conj() / den;
        }
    }

    /// Integrates left to right from `boundary`, writing into `out`.
    pub fn propagate(&self, source: &[Complex64], boundary: Complex64, out: &mut [Complex64]) {
        out[0] = boundary;
        for j in 0..self.a.len() {
            out[j + 1] = self.a[j] * out[j] + self.b[j] * (0.5 * (source[j] + source[j + 1]));
        }
    }
}

/// Solves the quasi-static light equation for one atomic source envelope.
pub fn cross_propagate_light(
    source: &[Complex64],
    phi1: &[Complex64],
    boundary: Complex64,
    medium: &LightMedium,
) -> Vec<Complex64> {
    assert_eq!(source.len(), phi1.len(), "source and condensate lengths differ");
    let mut coeffs = CrossCoefficients::new(phi1.len());
    coeffs.update(phi1, medium);
    let mut out = vec![Complex64::new(0.0, 0.0); phi1.len()];
    coeffs.propagate(source, boundary, &mut out);
    out
}
