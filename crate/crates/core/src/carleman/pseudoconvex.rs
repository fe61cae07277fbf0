use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{phi_tau_grad_hess, CarlemanWeight};
use crate::graph_core::OnePointGraph;
use crate::{Error, Result};

/// `grad_E^T hess_E grad_E + xi_E^T hess_E xi_E` with `xi_E = E xi`.
pub fn pseudoconvexity_quantity(w: &CarlemanWeight, graph: &OnePointGraph, x: &[f64], xi: &[f64]) -> Result<f64> {
    if xi.len() != graph.dim() {
        return Err(Error::input("frequency dimension does not match the graph"));
    }
    let der = phi_tau_grad_hess(w, graph, x)?;
    let xi_e = graph.e_matrix() * DVector::from_column_slice(xi);
    Ok(der.grad_e.dot(&(&der.hess_e * &der.grad_e)) + xi_e.dot(&(&der.hess_e * &xi_e)))
}

/// The explicit lower bound `c (1 - c pi/2)^2 / (4^4 (1 + 4 log^2 2))` at `tau = 1`.
pub fn pseudoconvexity_floor(c: f64) -> f64 {
    let l2 = std::f64::consts::LN_2;
    c * (1.0 - c * std::f64::consts::FRAC_PI_2).powi(2) / (256.0 * (1.0 + 4.0 * l2 * l2))
}

/// Symmetric square root and inverse square root of an SPD matrix.
fn sqrt_pair(g: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let e = g.clone().symmetric_eigen();
    let d = e.eigenvalues.len();
    let mut s = DMatrix::zeros(d, d);
    let mut si = DMatrix::zeros(d, d);
    for i in 0..d {
        let v = e.eigenvectors.column(i);
        let l = e.eigenvalues[i];
        s += v * v.transpose() * l.sqrt();
        si += v * v.transpose() / l.sqrt();
    }
    (s, si)
}

/// A point of the characteristic set at `x`, in the direction `dir` (projected), as a frequency `xi`.
pub fn characteristic_point(w: &CarlemanWeight, graph: &OnePointGraph, x: &[f64], dir: &[f64]) -> Result<DVector<f64>> {
    let der = phi_tau_grad_hess(w, graph, x)?;
    let (gs, gsi) = sqrt_pair(graph.gram());
    let wv = &gs * &der.gradient;
    let rho = wv.norm();
    let mut y = DVector::from_column_slice(dir);
    y -= &wv * (wv.dot(&y) / wv.norm_squared());
    let n = y.norm();
    if n == 0.0 {
        return Err(Error::input("direction is parallel to the weight gradient"));
    }
    Ok(gsi * (y * (rho / n)))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PseudoconvexityReport {
    pub tau: f64,
    pub gamma0: f64,
    pub min_value: f64,
    pub argmin_x: Vec<f64>,
    pub argmin_xi: Vec<f64>,
    /// `min_value / tau^3`.
    pub min_scaled: f64,
    /// `floor_fraction * floor * tau^3`, the value the minimum must reach.
    pub threshold: f64,
    pub pass: bool,
    pub points: usize,
    pub samples_per_point: usize,
}

/// Minimum of the pseudoconvexity quantity over `x` in `B_4 \ B_1` (radial x angular grid) and
/// seeded samples of `xi` in the `gamma0 tau` neighbourhood of the characteristic set.
#[allow(clippy::too_many_arguments)]
pub fn pseudoconvexity_grid_min(
    w: &CarlemanWeight,
    graph: &OnePointGraph,
    radial: usize,
    angular: usize,
    samples: usize,
    gamma0: f64,
    floor_fraction: f64,
    seed: u64,
) -> Result<PseudoconvexityReport> {
    if radial == 0 || angular == 0 || samples == 0 {
        return Err(Error::input("pseudoconvexity grid must be nonempty"));
    }
    let d = graph.dim();
    let mut dirs_rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<DVector<f64>> = (0..angular)
        .map(|a| {
            if d == 2 {
                let th = 2.0 * std::f64::consts::PI * a as f64 / angular as f64;
                DVector::from_vec(vec![th.cos(), th.sin()])
            } else if d == 1 {
                DVector::from_vec(vec![if a % 2 == 0 { 1.0 } else { -1.0 }])
            } else {
                DVector::from_fn(d, |_, _| dirs_rng.random_range(-1.0..1.0))
            }
        })
        .collect();
    let mut points = Vec::with_capacity(radial * angular);
    for i in 0..radial {
        let r = if radial == 1 { 1.0 } else { 1.0 + 3.0 * i as f64 / (radial - 1) as f64 };
        for dir in &dirs {
            let n = graph.gamma_norm(dir.as_slice())?;
            points.push(dir * (r / n));
        }
    }
    let (gs, gsi) = sqrt_pair(graph.gram());
    let g = graph.gram();
    let results: Vec<Result<(f64, Vec<f64>, Vec<f64>)>> = points
        .par_iter()
        .enumerate()
        .map(|(pi, x)| {
            let der = phi_tau_grad_hess(w, graph, x.as_slice())?;
            let base = der.grad_e.dot(&(&der.hess_e * &der.grad_e));
            // xi_E^T hess_E xi_E = xi^T (G H G) xi.
            let k = g * &der.hessian * g;
            let wv = &gs * &der.gradient;
            let rho = wv.norm();
            let wn = &wv / rho;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(pi as u64 + 1)));
            let mut best = (f64::INFINITY, Vec::new());
            for _ in 0..samples {
                // Point on the characteristic set in y = G^{1/2} xi coordinates.
                let mut y = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                y -= &wn * wn.dot(&y);
                let yn = y.norm();
                if d > 1 && yn > 0.0 {
                    y *= rho / yn;
                } else {
                    y.fill(0.0);
                }
                // Uniform offset in the ball of radius gamma0 * tau.
                let mut delta = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                while delta.norm() > 1.0 {
                    delta = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                }
                y += delta * (gamma0 * w.tau);
                let xi = &gsi * y;
                let v = base + xi.dot(&(&k * &xi));
                if v < best.0 {
                    best = (v, xi.iter().copied().collect());
                }
            }
            Ok((best.0, x.iter().copied().collect(), best.1))
        })
        .collect();
    let mut min = (f64::INFINITY, Vec::new(), Vec::new());
    for r in results {
        let r = r?;
        if r.0 < min.0 {
            min = r;
        }
    }
    let tau3 = w.tau.powi(3);
    let threshold = floor_fraction * pseudoconvexity_floor(w.c) * tau3;
    Ok(PseudoconvexityReport {
        tau: w.tau,
        gamma0,
        min_value: min.0,
        argmin_x: min.1,
        argmin_xi: min.2,
        min_scaled: min.0 / tau3,
        threshold,
        pass: min.0 >= threshold,
        points: points.len(),
        samples_per_point: samples,
    })
}
