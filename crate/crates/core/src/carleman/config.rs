use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The free constants of the Carleman and three-balls machinery, with grid sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    /// Weight parameter, `0 < c < 2/pi`.
    pub c: f64,
    pub tau0: f64,
    pub delta0: f64,
    pub h0: f64,
    /// Commutator weight in the symbol lower bound.
    pub c0: f64,
    /// Candidate values of `c0` for symbol certification.
    pub c0_sweep: Vec<f64>,
    /// Radius factor of the neighbourhood of the characteristic set.
    pub gamma0: f64,
    /// Fixed `kappa`; fitted from the symbols when absent.
    pub kappa: Option<f64>,
    /// Partition-of-unity scale; carried for completeness, unused at runtime.
    pub lambda: f64,
    /// Relative singular-value cutoff for rank decisions.
    pub svd_cutoff: f64,
    /// Floor the symbol ratio must exceed after the Lipschitz discount.
    pub symbol_floor: f64,
    /// Frequency grid points per dual coordinate.
    pub xi_grid: usize,
    /// Base-point grid in the annulus: radial and angular counts.
    pub xbar_radial: usize,
    pub xbar_angular: usize,
    /// Pseudoconvexity sampling: radial and angular counts and frequency samples per point.
    pub pc_radial: usize,
    pub pc_angular: usize,
    pub pc_xi_samples: usize,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            c: 0.1,
            tau0: 2.0,
            delta0: 0.5,
            h0: 0.125,
            c0: 0.01,
            c0_sweep: vec![1e-3, 1e-2, 1e-1],
            gamma0: 0.1,
            kappa: None,
            lambda: 1.0,
            svd_cutoff: 1e-10,
            symbol_floor: 0.0,
            xi_grid: 201,
            xbar_radial: 5,
            xbar_angular: 5,
            pc_radial: 50,
            pc_angular: 64,
            pc_xi_samples: 10_000,
        }
    }
}

impl ConstantsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c", self.c),
            ("tau0", self.tau0),
            ("delta0", self.delta0),
            ("h0", self.h0),
            ("c0", self.c0),
            ("gamma0", self.gamma0),
            ("lambda", self.lambda),
            ("svd_cutoff", self.svd_cutoff),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::input(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.c >= 2.0 / std::f64::consts::PI {
            return Err(Error::input(format!("c must be below 2/pi, got {}", self.c)));
        }
        if !(self.delta0 < 1.0) {
            return Err(Error::input(format!("delta0 must be below 1, got {}", self.delta0)));
        }
        if !(self.h0 < self.delta0) {
            return Err(Error::input(format!("h0 = {} must be below delta0 = {}", self.h0, self.delta0)));
        }
        if !(self.tau0 > 1.0) {
            return Err(Error::input(format!("tau0 must exceed 1, got {}", self.tau0)));
        }
        if self.c0_sweep.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::input("c0 sweep values must be positive"));
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0) {
                return Err(Error::input("kappa must be positive"));
            }
        }
        if self.xi_grid == 0 || self.xbar_radial == 0 || self.xbar_angular == 0 {
            return Err(Error::input("grid sizes must be positive"));
        }
        Ok(())
    }

    /// Checks `tau0 < tau < delta0 / h`.
    pub fn check_tau(&self, tau: f64, h: f64) -> Result<()> {
        let hi = self.delta0 / h;
        if !(tau > self.tau0 && tau < hi) {
            return Err(Error::input(format!(
                "tau = {tau} is outside ({}, {hi}) for h = {h}",
                self.tau0
            )));
        }
        Ok(())
    }

    /// The default rule `tau = 0.5 * delta0 / h`.
    pub fn default_tau(&self, h: f64) -> f64 {
        0.5 * self.delta0 / h
    }
}
