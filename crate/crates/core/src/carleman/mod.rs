//! The Carleman weight, the conjugated operator and the empirical Carleman ratio.

mod config;
mod conjugated;
mod pseudoconvex;
mod ratio;

pub use config::ConstantsConfig;
pub use conjugated::{
    commutator_form_closed, commutator_form_matrix, conjugated_apply, conjugated_apply_naive, split_sa, SplitOperators,
};
pub use pseudoconvex::{
    characteristic_point, pseudoconvexity_floor, pseudoconvexity_grid_min, pseudoconvexity_quantity,
    PseudoconvexityReport,
};
pub use ratio::{
    annulus_bump, carleman_ratio, carleman_sup_estimate, conjugated_forms, CarlemanForms, CarlemanRatio, SupEstimate,
};

use nalgebra::{DMatrix, DVector};

use crate::graph_core::OnePointGraph;
use crate::{Error, Result};

/// `phi_tau(x) = tau * phi(|x|_Gamma)` with
/// `phi(t) = -log t + c (log t * atan(log t) - log(1 + log^2 t) / 2)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CarlemanWeight {
    pub c: f64,
    pub tau: f64,
}

impl CarlemanWeight {
    /// Requires `0 < c < 2/pi` and `tau > 0`; the admissible tau range is checked where
    /// estimates are evaluated.
    pub fn new(c: f64, tau: f64) -> Result<Self> {
        if !(c > 0.0 && c < 2.0 / std::f64::consts::PI) {
            return Err(Error::input(format!("weight parameter c = {c} must lie in (0, 2/pi)")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::input(format!("tau = {tau} must be positive")));
        }
        Ok(Self { c, tau })
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.c, tau)
    }

    fn check_t(t: f64) -> Result<()> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("weight evaluated at t = {t}; t must be positive")));
        }
        Ok(())
    }

    /// `phi(t)` without the tau factor.
    pub fn phi(&self, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        let l = t.ln();
        Ok(-l + self.c * (l * l.atan() - 0.5 * l.mul_add(l, 1.0).ln()))
    }

    pub fn dphi(&self, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        let l = t.ln();
        Ok((-1.0 + self.c * l.atan()) / t)
    }

    pub fn d2phi(&self, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        let l = t.ln();
        Ok((1.0 - self.c * l.atan()) / (t * t) + self.c / (t * t * (1.0 + l * l)))
    }

    /// `tau * phi(t)`.
    pub fn phi_tau_radial(&self, t: f64) -> Result<f64> {
        Ok(self.tau * self.phi(t)?)
    }

    /// `c_1 = 2 (phi(1/4) - phi(1))` and `c_2 = 2 (phi(1) - phi(3/2))`.
    pub fn three_ball_exponents(&self) -> (f64, f64) {
        let p = |t: f64| self.phi(t).expect("positive argument");
        (2.0 * (p(0.25) - p(1.0)), 2.0 * (p(1.0) - p(1.5)))
    }

    /// `alpha = c_2 / (c_1 + c_2)`.
    pub fn interpolation_exponent(&self) -> f64 {
        let (c1, c2) = self.three_ball_exponents();
        c2 / (c1 + c2)
    }
}

/// `phi(t)`, `phi'(t)` or `phi''(t)` for `order` 0, 1, 2.
pub fn weight_eval(w: &CarlemanWeight, t: f64, order: u8) -> Result<f64> {
    match order {
        0 => w.phi(t),
        1 => w.dphi(t),
        2 => w.d2phi(t),
        _ => Err(Error::input(format!("derivative order {order} is not supported"))),
    }
}

/// Value, Cartesian gradient and Hessian of `phi_tau`, and their lifts by `E`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightDerivatives {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    /// `E grad`, a k-vector.
    pub grad_e: DVector<f64>,
    /// `E hess E^T`, a k x k matrix.
    pub hess_e: DMatrix<f64>,
}

pub fn phi_tau_grad_hess(w: &CarlemanWeight, graph: &OnePointGraph, x: &[f64]) -> Result<WeightDerivatives> {
    let t = graph.gamma_norm(x)?;
    if t == 0.0 {
        return Err(Error::domain("the weight is singular at the origin"));
    }
    let a = graph.gram_inverse();
    let xv = DVector::from_column_slice(x);
    let ax = a * &xv;
    let (p1, p2) = (w.dphi(t)?, w.d2phi(t)?);
    let gradient = &ax * (w.tau * p1 / t);
    let u = &ax / t;
    let hessian = (&u * u.transpose()) * (w.tau * (p2 - p1 / t)) + a * (w.tau * p1 / t);
    let e = graph.e_matrix();
    let grad_e = e * &gradient;
    let hess_e = e * &hessian * e.transpose();
    Ok(WeightDerivatives { value: w.tau * w.phi(t)?, gradient, hessian, grad_e, hess_e })
}
