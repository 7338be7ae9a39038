//! Closed-form reference results: the static beam splitter and two-mode Rabi
//! transfer.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{epr_inferred, input_covariance, GaussianSummary};

/// A squeezed mode mixed with vacuum on a beam splitter of transmissivity η
/// into the atomic port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamSplitterCase {
    pub eta: f64,
    pub r: f64,
    pub theta_sq: f64,
}

impl BeamSplitterCase {
    pub fn new(eta: f64, r: f64) -> Result<Self> {
        let case = Self {
            eta,
            r,
            theta_sq: 0.0,
        };
        case.validate()?;
        Ok(case)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::validation("eta", "must lie in [0, 1]"));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::validation("r", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Output statistics of the beam splitter, written out block by block.
///
/// With σ_in the input covariance and t = sqrt(η), s = sqrt(1 − η):
/// A = t²σ_in + s²I, B = s²σ_in + t²I, C = ts(σ_in − I).
pub fn beamsplitter_summary(case: &BeamSplitterCase) -> Result<GaussianSummary> {
    case.validate()?;
    let sin = input_covariance(case.r, case.theta_sq);
    let t2 = case.eta;
    let s2 = 1.0 - case.eta;
    let ts = (t2 * s2).sqrt();
    let id = Matrix2::<f64>::identity();
    let a = sin * t2 + id * s2;
    let b = sin * s2 + id * t2;
    let c = (sin - id) * ts;
    let mut sigma = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            sigma[i][j] = a[(i, j)];
            sigma[i + 2][j + 2] = b[(i, j)];
            sigma[i][j + 2] = c[(i, j)];
            sigma[j + 2][i] = c[(i, j)];
        }
    }
    Ok(epr_inferred(GaussianSummary::from_covariance(0.0, sigma, [0.0; 4])))
}

/// Inferred variances (V_inf(X⁺), V_inf(X⁻)) of the balanced splitter with an
/// amplitude-squeezed input.
pub fn balanced_inferred_variances(r: f64) -> (f64, f64) {
    let m = (-2.0 * r).exp();
    let p = (2.0 * r).exp();
    (2.0 * m / (1.0 + m), 2.0 * p / (1.0 + p))
}

/// Fraction transferred by a resonant two-level Rabi pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RabiTransfer {
    /// sin²(Ω τ).
    pub eta: f64,
    /// The same from direct integration of the two amplitude equations.
    pub eta_numeric: f64,
}

/// Resonant two-mode transfer with coupling rate Ω (i ȧ = −Ω b, i ḃ = −Ω a)
/// over a duration τ. A quarter period Ωτ = π/2 transfers everything.
pub fn two_mode_rabi(omega: f64, tau: f64) -> Result<RabiTransfer> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::validation("omega_eff", "must be finite and non-negative"));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::validation("tau", "must be finite and non-negative"));
    }
    let eta = (omega * tau).sin().powi(2);
    let steps = ((omega.abs() * tau / 0.01).ceil() as usize).clamp(100, 10_000_000);
    let (_, b) = two_mode_ode(
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        Complex64::new(omega, 0.0),
        [0.0, 0.0],
        tau,
        steps,
    );
    Ok(RabiTransfer {
        eta,
        eta_numeric: b.norm_sqr(),
    })
}

/// RK4 integration of i ȧ = ω_a a − κ b, i ḃ = ω_b b − κ* a from `start`.
pub fn two_mode_ode(
    start: [Complex64; 2],
    kappa: Complex64,
    freqs: [f64; 2],
    tau: f64,
    steps: usize,
) -> (Complex64, Complex64) {
    let i = Complex64::new(0.0, 1.0);
    let rhs = |y: [Complex64; 2]| -> [Complex64; 2] {
        [
            -i * (freqs[0] * y[0] - kappa * y[1]),
            -i * (freqs[1] * y[1] - kappa.conj() * y[0]),
        ]
    };
    let steps = steps.max(1);
    let h = tau / steps as f64;
    let mut y = start;
    let axpy = |y: [Complex64; 2], k: [Complex64; 2], s: f64| [y[0] + k[0] * s, y[1] + k[1] * s];
    for _ in 0..steps {
        let k1 = rhs(y);
        let k2 = rhs(axpy(y, k1, 0.5 * h));
        let k3 = rhs(axpy(y, k2, 0.5 * h));
        let k4 = rhs(axpy(y, k3, h));
        for n in 0..2 {
            y[n] += (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]) * (h / 6.0);
        }
    }
    (y[0], y[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn balanced_r2_reference_numbers() {
        let s = beamsplitter_summary(&BeamSplitterCase::new(0.5, 2.0).unwrap()).unwrap();
        assert_abs_diff_eq!(s.v_x_plus, 0.50916, epsilon = 1e-5);
        assert_abs_diff_eq!(s.cov_plus, -0.49084, epsilon = 1e-5);
        assert_abs_diff_eq!(s.vinf_x_plus, 0.035973, epsilon = 1e-5);
        assert_abs_diff_eq!(s.vinf_x_minus, 1.96403, epsilon = 1e-5);
        assert_abs_diff_eq!(s.product, 0.070651, epsilon = 1e-5);
        let expected = 4.0 / (2.0 + 4f64.exp() + (-4f64).exp());
        assert_abs_diff_eq!(s.product, expected, epsilon = 1e-12);
        assert!(s.entangled);
    }

    #[test]
    fn closed_form_inferred_variances() {
        let (p, m) = balanced_inferred_variances(2.0);
        let s = beamsplitter_summary(&BeamSplitterCase::new(0.5, 2.0).unwrap()).unwrap();
        assert_abs_diff_eq!(s.vinf_x_plus, p, epsilon = 1e-12);
        assert_abs_diff_eq!(s.vinf_x_minus, m, epsilon = 1e-12);
    }

    #[test]
    fn rejects_out_of_range_eta() {
        assert!(BeamSplitterCase::new(1.2, 1.0).is_err());
        assert!(BeamSplitterCase::new(-0.1, 1.0).is_err());
        assert!(BeamSplitterCase::new(0.5, -1.0).is_err());
    }

    #[test]
    fn extremes_transfer_or_keep_squeezing() {
        let full = beamsplitter_summary(&BeamSplitterCase::new(1.0, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(full.v_x_plus, (-2f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(full.v_y_plus, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(full.cov_plus, 0.0, epsilon = 1e-14);
        let none = beamsplitter_summary(&BeamSplitterCase::new(0.0, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(none.v_x_plus, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(none.v_y_plus, (-2f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn rabi_closed_form_matches_ode() {
        for &(om, tau) in &[(1.0, 0.3), (2.0, std::f64::consts::PI / 2.0), (5.0, 3.7)] {
            let t = two_mode_rabi(om, tau).unwrap();
            assert_abs_diff_eq!(t.eta, t.eta_numeric, epsilon = 1e-9);
        }
        let half = two_mode_rabi(1.0, std::f64::consts::FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(half.eta, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(half.eta_numeric, 0.5, epsilon = 1e-9);
        let full = two_mode_rabi(2.0, std::f64::consts::FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(full.eta, 1.0, epsilon = 1e-14);
        assert_eq!(two_mode_rabi(0.0, 3.0).unwrap().eta, 0.0);
    }

    #[test]
    fn detuned_ode_conserves_norm() {
        let (a, b) = two_mode_ode(
            [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
            Complex64::from_polar(1.3, 0.4),
            [0.7, -0.2],
            10.0,
            20_000,
        );
        assert_abs_diff_eq!(a.norm_sqr() + b.norm_sqr(), 1.0, epsilon = 1e-10);
    }

    proptest! {
        #[test]
        fn beamsplitter_outputs_are_physical(eta in 0.0f64..=1.0, r in 0.0f64..3.0) {
            let s = beamsplitter_summary(&BeamSplitterCase::new(eta, r).unwrap()).unwrap();
            prop_assert!(s.uncertainty_x >= 1.0 - 1e-9);
            prop_assert!(s.uncertainty_y >= 1.0 - 1e-9);
            prop_assert!(s.product <= 1.0 + 1e-9);
            prop_assert!(crate::stats::min_eigenvalue(&s.sigma) >= -1e-9);
        }

        #[test]
        fn balanced_product_formula(r in 0.0f64..3.0) {
            let s = beamsplitter_summary(&BeamSplitterCase::new(0.5, r).unwrap()).unwrap();
            let x = (2.0 * r).exp();
            let expected = 4.0 / (2.0 + x + 1.0 / x);
            prop_assert!((s.product - expected).abs() < 1e-10);
        }
    }
}
