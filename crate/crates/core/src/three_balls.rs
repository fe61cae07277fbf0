//! Empirical three-balls and Caccioppoli checks for solutions on `B_4`.

use faer::Mat;
use serde::Serialize;

use crate::carleman::{CarlemanWeight, ConstantsConfig};
use crate::graph_core::{in_ball, OnePointGraph, VertexWindow};
use crate::harmonic_solver::{vanishing_null_basis, HarmonicSolver};
use crate::linalg::{linear_fit, sym_eigen};
use crate::operators::{GridFunction, SparseOperatorMatrix};
use crate::{Error, Result};

/// Interior residual accepted for a function to count as a solution, relative to `max|H| max|u|`.
pub const SOLUTION_TOL: f64 = 1e-8;
const BLOCK: usize = 64;

/// `l2` norms of `u` on the closed balls `B_1/2`, `B_1` and `B_2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallNorms {
    pub n_half: f64,
    pub n_one: f64,
    pub n_two: f64,
}

pub fn ball_norms(window: &VertexWindow, u: &GridFunction) -> Result<BallNorms> {
    if !in_ball(2.0, window.radius) {
        return Err(Error::input(format!("window radius {} is below 2", window.radius)));
    }
    if u.len() != window.len() {
        return Err(Error::input("function length does not match the window"));
    }
    let mut s = [0.0; 3];
    for (v, x) in u.values().iter().enumerate() {
        let n = window.norm(v);
        for (i, r) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            if in_ball(n, r) {
                s[i] += x * x;
            }
        }
    }
    Ok(BallNorms { n_half: s[0].sqrt(), n_one: s[1].sqrt(), n_two: s[2].sqrt() })
}

/// `max |H u|` over rows that are not identity rows, relative to `max|H| max|u|`.
pub fn solution_residual(operator: &SparseOperatorMatrix, window: &VertexWindow, u: &GridFunction) -> Result<f64> {
    if operator.nrows() != window.len() || u.len() != window.len() {
        return Err(Error::input("operator, window and function sizes differ"));
    }
    let hu = operator.apply(u.values());
    let worst = window.interior_vertices().into_iter().map(|v| hu[v].abs()).fold(0.0, f64::max);
    let scale = operator.max_abs() * u.sup_norm();
    Ok(if scale > 0.0 { worst / scale } else { 0.0 })
}

/// Where `tau*` with `e^{c1 tau*} n_half = e^{-c2 tau*} n_two` falls relative to the admissible range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TauCase {
    BelowRange,
    InRange,
    AboveRange,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreeBallsCheck {
    pub norms: BallNorms,
    pub c1: f64,
    pub c2: f64,
    pub tau_lo: f64,
    pub tau_hi: f64,
    /// `sup_tau n_one / (e^{c1 tau} n_half + e^{-c2 tau} n_two)` over the closed range.
    pub constant: f64,
    pub argmax_tau: f64,
    /// Largest ratio on the sampled tau grid (never above `constant`).
    pub grid_max: f64,
    pub tau_star: Option<f64>,
    pub case: TauCase,
    pub residual: f64,
}

/// Empirical constant of the first three-balls form for one solution.
pub fn three_balls_check(
    operator: &SparseOperatorMatrix,
    window: &VertexWindow,
    u: &GridFunction,
    c: f64,
    config: &ConstantsConfig,
    tau_points: usize,
) -> Result<ThreeBallsCheck> {
    let residual = solution_residual(operator, window, u)?;
    if !(residual <= SOLUTION_TOL) {
        return Err(Error::input(format!("u is not a solution: relative residual {residual:.3e}")));
    }
    let norms = ball_norms(window, u)?;
    let (c1, c2) = CarlemanWeight::new(c, 1.0)?.three_ball_exponents();
    let (lo, hi) = (config.tau0, config.delta0 / window.h);
    if !(lo < hi) {
        return Err(Error::input(format!("empty tau range ({lo}, {hi}) at h = {}", window.h)));
    }
    let ratio = |t: f64| {
        let den = (c1 * t).exp() * norms.n_half + (-c2 * t).exp() * norms.n_two;
        if den > 0.0 {
            norms.n_one / den
        } else {
            0.0
        }
    };
    let mut grid_max = 0.0f64;
    let mut best = (ratio(lo), lo);
    for i in 0..tau_points {
        let t = lo + (hi - lo) * (i as f64 + 0.5) / tau_points as f64;
        let r = ratio(t);
        grid_max = grid_max.max(r);
        if r > best.0 {
            best = (r, t);
        }
    }
    for t in [hi] {
        if ratio(t) > best.0 {
            best = (ratio(t), t);
        }
    }
    // The denominator is convex in tau; its minimiser gives the supremum when it is in range.
    let tau_star = (norms.n_half > 0.0 && norms.n_two > 0.0).then(|| (norms.n_two / norms.n_half).ln() / (c1 + c2));
    if norms.n_half > 0.0 && norms.n_two > 0.0 {
        let t = ((c2 * norms.n_two) / (c1 * norms.n_half)).ln() / (c1 + c2);
        let t = t.clamp(lo, hi);
        if ratio(t) > best.0 {
            best = (ratio(t), t);
        }
    }
    let case = match tau_star {
        Some(t) if t <= lo => TauCase::BelowRange,
        Some(t) if t < hi => TauCase::InRange,
        _ => TauCase::AboveRange,
    };
    Ok(ThreeBallsCheck {
        norms,
        c1,
        c2,
        tau_lo: lo,
        tau_hi: hi,
        constant: best.0,
        argmax_tau: best.1,
        grid_max,
        tau_star,
        case,
        residual,
    })
}

/// Largest value of `||u||_{B_1} / ||u||_{B_2}` over solutions vanishing on `B_r`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalResult {
    pub h: f64,
    pub inner_radius: f64,
    pub max_ratio: f64,
    /// Maximiser as coefficients in the basis of vanishing solutions (unit Euclidean norm).
    pub argmax: Vec<f64>,
    pub dim: usize,
    /// Directions removed because their `B_2` form is numerically zero.
    pub deflated: usize,
    pub rank: usize,
    pub constraint_rows: usize,
}

/// Gram matrices `G^T S^T M_r S G` of the masked extensions for the given vertex masks.
fn masked_grams(solver: &HarmonicSolver, g: &Mat<f64>, masks: &[Vec<bool>]) -> Vec<Mat<f64>> {
    let (nb, dim) = (g.nrows(), g.ncols());
    let mut kg: Vec<Mat<f64>> = masks.iter().map(|_| Mat::zeros(nb, dim)).collect();
    let mut start = 0;
    while start < dim {
        let width = BLOCK.min(dim - start);
        let gb = Mat::<f64>::from_fn(nb, width, |i, j| g[(i, start + j)]);
        let u = solver.extend_block(&gb);
        for (mask, out) in masks.iter().zip(kg.iter_mut()) {
            let w = Mat::<f64>::from_fn(u.nrows(), width, |i, j| if mask[i] { u[(i, j)] } else { 0.0 });
            let a = solver.extend_adjoint_block(&w);
            for i in 0..nb {
                for j in 0..width {
                    out[(i, start + j)] = a[(i, j)];
                }
            }
        }
        start += width;
    }
    kg.into_iter()
        .map(|k| {
            let q = g.transpose() * &k;
            Mat::<f64>::from_fn(dim, dim, |i, j| 0.5 * (q[(i, j)] + q[(j, i)]))
        })
        .collect()
}

/// Maximises `||u||^2_{B_1} / ||u||^2_{B_2}` over the span of solutions vanishing on `B_r`
/// through the generalized symmetric eigenproblem of the two Gram forms.
pub fn extremal_vanishing_ratio(
    solver: &HarmonicSolver,
    window: &VertexWindow,
    r: f64,
    cutoff: f64,
) -> Result<ExtremalResult> {
    if !in_ball(2.0, window.radius) {
        return Err(Error::input(format!("window radius {} is below 2", window.radius)));
    }
    let basis = vanishing_null_basis(solver, window, r, cutoff)?;
    if basis.is_empty() {
        return Err(Error::input("no nontrivial vanishing solutions"));
    }
    let inner = window.ball_mask(r);
    let mask = |big: f64| -> Vec<bool> {
        (0..window.len()).map(|v| !inner[v] && in_ball(window.norm(v), big)).collect()
    };
    let grams = masked_grams(solver, &basis.boundary_data, &[mask(1.0), mask(2.0)]);
    let (q1, q2) = (&grams[0], &grams[1]);
    let dim = basis.dim();
    let (ev2, vec2) = sym_eigen(q2)?;
    let top = ev2.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..dim).filter(|&i| ev2[i] > cutoff * top && ev2[i] > 0.0).collect();
    if keep.is_empty() {
        return Err(Error::solver("every vanishing solution is zero on B_2"));
    }
    let w = Mat::<f64>::from_fn(dim, keep.len(), |i, c| vec2[(i, keep[c])] / ev2[keep[c]].sqrt());
    let m = w.transpose() * q1 * &w;
    let m = Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let (ev, vecs) = sym_eigen(&m)?;
    let mu = ev.last().copied().unwrap_or(0.0).clamp(0.0, 1.0);
    let last = ev.len() - 1;
    let coeffs = &w * vecs.col(last);
    let norm = coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(ExtremalResult {
        h: window.h,
        inner_radius: r,
        max_ratio: mu.sqrt(),
        argmax: coeffs.iter().map(|x| x / norm).collect(),
        dim,
        deflated: dim - keep.len(),
        rank: basis.rank,
        constraint_rows: basis.constraint_rows,
    })
}

/// Checks `0 < 10h < r1 < r1 + 100h < r2`.
pub fn caccioppoli_geometry(h: f64, r1: f64, r2: f64) -> Result<()> {
    let fail = |what: String| Err(Error::input(format!("Caccioppoli geometry violated: {what}")));
    if !(h > 0.0) {
        return fail(format!("0 < h fails for h = {h}"));
    }
    if !(10.0 * h < r1) {
        return fail(format!("10h < r1 fails: 10h = {} and r1 = {r1}", 10.0 * h));
    }
    if !(r1 + 100.0 * h < r2) {
        return fail(format!("r1 + 100h < r2 fails: r1 + 100h = {} and r2 = {r2}", r1 + 100.0 * h));
    }
    Ok(())
}

/// Supremum of mesh sizes satisfying the Caccioppoli geometry for the given radii.
pub fn max_caccioppoli_h(r1: f64, r2: f64) -> f64 {
    (r1 / 10.0).min((r2 - r1) / 100.0).max(0.0)
}

/// `sum_j ||h^-1 D_j^+ u||^2_{B_r1} / ||u||^2_{B_r2}`.
pub fn caccioppoli_ratio(
    graph: &OnePointGraph,
    window: &VertexWindow,
    u: &GridFunction,
    r1: f64,
    r2: f64,
) -> Result<f64> {
    caccioppoli_geometry(window.h, r1, r2)?;
    if !in_ball(r2, window.radius) {
        return Err(Error::input(format!("window radius {} is below r2 = {r2}", window.radius)));
    }
    if u.len() != window.len() {
        return Err(Error::input("function length does not match the window"));
    }
    let f = u.values();
    let h = window.h;
    let mut num = 0.0;
    let mut den = 0.0;
    for v in 0..window.len() {
        let n = window.norm(v);
        if in_ball(n, r2) {
            den += f[v] * f[v];
        }
        if in_ball(n, r1) {
            for j in 0..graph.k() {
                let p = window.neighbor_slot(v, 2 * j).ok_or_else(|| Error::Stencil {
                    vertex: v,
                    missing: format!("+e_{}", j + 1),
                })?;
                num += ((f[p] - f[v]) / h).powi(2);
            }
        }
    }
    if den == 0.0 {
        return Err(Error::input("u vanishes on B_r2"));
    }
    Ok(num / den)
}

/// Norms of one ensemble at a mesh size, with the extremal vanishing ratio at that mesh size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleAtH {
    pub h: f64,
    pub norms: Vec<BallNorms>,
    pub extremal_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterpolationFit {
    /// `c2 / (c1 + c2)` from the weight.
    pub alpha: f64,
    /// Fitted decay rate of the extremal ratio: `log ratio ~ a - c0 / h`.
    pub c0: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Largest `n_one / (n_half^alpha n_two^(1 - alpha) + e^{-c0/h} n_two)` over all ensembles.
    pub constant: f64,
}

/// Least-squares line through `(1/h, log ratio)`: returns `(slope, intercept, r_squared)`.
pub fn extremal_decay_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.iter().any(|&(h, r)| !(h > 0.0 && r > 0.0)) {
        return Err(Error::input("decay fit needs positive mesh sizes and ratios"));
    }
    let x: Vec<f64> = points.iter().map(|p| 1.0 / p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (a, b, r2) = linear_fit(&x, &y)?;
    Ok((b, a, r2))
}

pub fn interpolation_fit(ensembles: &[EnsembleAtH], c: f64) -> Result<InterpolationFit> {
    if ensembles.len() < 3 {
        return Err(Error::input(format!("interpolation fit needs at least 3 mesh sizes, got {}", ensembles.len())));
    }
    let alpha = CarlemanWeight::new(c, 1.0)?.interpolation_exponent();
    let pts: Vec<(f64, f64)> = ensembles.iter().map(|e| (e.h, e.extremal_ratio)).collect();
    let (slope, intercept, r_squared) = extremal_decay_fit(&pts)?;
    let c0 = -slope;
    let mut constant = 0.0f64;
    for e in ensembles {
        let err = (-c0 / e.h).exp();
        for n in &e.norms {
            let den = n.n_half.powf(alpha) * n.n_two.powf(1.0 - alpha) + err * n.n_two;
            if den > 0.0 {
                constant = constant.max(n.n_one / den);
            }
        }
    }
    Ok(InterpolationFit { alpha, c0, intercept, r_squared, constant })
}

/// Three-balls checks over a seeded ensemble of random solutions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub h: f64,
    pub seed: u64,
    pub runs: Vec<ThreeBallsCheck>,
    /// Largest per-solution constant: the empirical `C`.
    pub constant: f64,
    pub below_range: usize,
    pub in_range: usize,
    pub above_range: usize,
}

/// Seeds `seed, seed + 1, ...` for an ensemble of the given size.
pub fn ensemble_seeds(seed: u64, size: usize) -> Vec<u64> {
    (0..size as u64).map(|i| seed.wrapping_add(i)).collect()
}

pub fn three_balls_ensemble(
    operator: &SparseOperatorMatrix,
    solver: &HarmonicSolver,
    window: &VertexWindow,
    c: f64,
    config: &ConstantsConfig,
    size: usize,
    seed: u64,
    tau_points: usize,
) -> Result<EnsembleReport> {
    let us = solver.random_harmonics(window, &ensemble_seeds(seed, size))?;
    let runs = us
        .iter()
        .map(|u| three_balls_check(operator, window, u, c, config, tau_points))
        .collect::<Result<Vec<_>>>()?;
    let count = |k: TauCase| runs.iter().filter(|r| r.case == k).count();
    Ok(EnsembleReport {
        h: window.h,
        seed,
        constant: runs.iter().map(|r| r.constant).fold(0.0, f64::max),
        below_range: count(TauCase::BelowRange),
        in_range: count(TauCase::InRange),
        above_range: count(TauCase::AboveRange),
        runs,
    })
}

/// Caccioppoli ratios over a seeded ensemble of random solutions; returns every ratio.
pub fn caccioppoli_ensemble(
    graph: &OnePointGraph,
    operator: &SparseOperatorMatrix,
    solver: &HarmonicSolver,
    window: &VertexWindow,
    r1: f64,
    r2: f64,
    size: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    caccioppoli_geometry(window.h, r1, r2)?;
    let us = solver.random_harmonics(window, &ensemble_seeds(seed, size))?;
    us.iter()
        .map(|u| {
            let residual = solution_residual(operator, window, u)?;
            if !(residual <= SOLUTION_TOL) {
                return Err(Error::input(format!("u is not a solution: relative residual {residual:.3e}")));
            }
            caccioppoli_ratio(graph, window, u, r1, r2)
        })
        .collect()
}
