use faer::prelude::*;
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::conjugated::phi_at;
use super::{CarlemanWeight, ConstantsConfig};
use crate::graph_core::{in_ball, OnePointGraph, VertexWindow};
use crate::linalg::sym_eigen;
use crate::operators::{GridFunction, SparseOperatorMatrix};
use crate::{Error, Result};

/// Inner and outer radius of the support annulus.
const R_IN: f64 = 0.5;
const R_OUT: f64 = 2.0;
/// Outer radius of the ball carrying the right-hand side.
const R_RHS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CarlemanRatio {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; NaN when both vanish and infinite when only `rhs` does.
    pub ratio: f64,
}

impl CarlemanRatio {
    /// A zero function passes trivially; an infinite ratio falsifies the estimate.
    pub fn is_finite_or_trivial(&self) -> bool {
        self.ratio.is_finite() || (self.lhs == 0.0 && self.rhs == 0.0)
    }
}

fn in_annulus(norm: f64) -> bool {
    !in_ball(norm, R_IN) && in_ball(norm, R_OUT)
}

fn check_support(window: &VertexWindow, u: &[f64]) -> Result<()> {
    let bad: Vec<usize> = (0..u.len()).filter(|&v| u[v] != 0.0 && !in_annulus(window.norm(v))).collect();
    if !bad.is_empty() {
        let shown: Vec<String> = bad.iter().take(10).map(|&v| format!("{}{:?}", v, window.index(v))).collect();
        return Err(Error::input(format!(
            "u must be supported in B_2 \\ B_1/2; {} vertices violate this, e.g. {}",
            bad.len(),
            shown.join(", ")
        )));
    }
    Ok(())
}

fn slot(window: &VertexWindow, v: usize, s: usize) -> Result<usize> {
    window.neighbor_slot(v, s).ok_or_else(|| Error::Stencil {
        vertex: v,
        missing: format!("{}e_{}", if s.is_multiple_of(2) { "+" } else { "-" }, s / 2 + 1),
    })
}

fn two_step(graph: &OnePointGraph, window: &VertexWindow, v: usize, j: usize, sign: i64) -> Result<usize> {
    let shift: Vec<i64> = graph.generator_coords()[j].iter().map(|c| 2 * sign * c).collect();
    window.shifted(v, &shift, 0).ok_or_else(|| Error::Stencil {
        vertex: v,
        missing: format!("{}2e_{}", if sign > 0 { "+" } else { "-" }, j + 1),
    })
}

/// Vertices whose 2-step stencil meets the support of `u`.
fn near_support(graph: &OnePointGraph, window: &VertexWindow, u: &[f64]) -> Result<Vec<bool>> {
    let mut near = vec![false; window.len()];
    for v in (0..u.len()).filter(|&v| u[v] != 0.0) {
        near[v] = true;
        for j in 0..graph.k() {
            for sign in [1, -1] {
                near[slot(window, v, 2 * j + usize::from(sign < 0))?] = true;
                near[two_step(graph, window, v, j, sign)?] = true;
            }
        }
    }
    Ok(near)
}

/// Both sides of the Carleman estimate for `u` supported in `B_2 \ B_1/2`:
/// `lhs = tau^3 |e^phi u|^2 + tau |e^phi h^-1 D_s u|^2 + tau^-1 |e^phi h^-2 D_s^2 u|^2` and
/// `rhs = |e^phi h^-2 Delta u|^2` over `B_4`.
pub fn carleman_ratio(
    w: &CarlemanWeight,
    graph: &OnePointGraph,
    window: &VertexWindow,
    u: &GridFunction,
    config: &ConstantsConfig,
) -> Result<CarlemanRatio> {
    if u.len() != window.len() {
        return Err(Error::input("function length does not match the window"));
    }
    config.check_tau(w.tau, window.h)?;
    let uv = u.values();
    check_support(window, uv)?;
    let near = near_support(graph, window, uv)?;
    let (h, tau) = (window.h, w.tau);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for v in (0..window.len()).filter(|&v| near[v]) {
        let mut ds = 0.0;
        let mut ds2 = 0.0;
        let mut lap = -2.0 * graph.k() as f64 * uv[v];
        for j in 0..graph.k() {
            let p = slot(window, v, 2 * j)?;
            let m = slot(window, v, 2 * j + 1)?;
            ds += (uv[p] - uv[m]).powi(2);
            let p2 = two_step(graph, window, v, j, 1)?;
            let m2 = two_step(graph, window, v, j, -1)?;
            ds2 += (uv[p2] - 2.0 * uv[v] + uv[m2]).powi(2);
            lap += uv[p] + uv[m];
        }
        let body = tau.powi(3) * uv[v] * uv[v] + tau * ds / (h * h) + ds2 / (tau * h.powi(4));
        let g2 = if in_ball(window.norm(v), R_RHS) { (lap / (h * h)).powi(2) } else { 0.0 };
        if body == 0.0 && g2 == 0.0 {
            continue;
        }
        let e2 = (2.0 * phi_at(w, window, v)?).exp();
        lhs += e2 * body;
        rhs += e2 * g2;
    }
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    };
    Ok(CarlemanRatio { lhs, rhs, ratio })
}

/// `b(|x|) sum_m a_m cos(<omega_m, x> + theta_m)` with `b(r) = exp(-1/((r - 1/2)(2 - r)))` on `(1/2, 2)`.
pub fn annulus_bump(window: &VertexWindow, modes: usize, seed: u64) -> Result<GridFunction> {
    let d = window.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, Vec<f64>, f64)> = (0..modes.max(1))
        .map(|_| {
            let a = rng.random_range(-1.0..1.0);
            let omega = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            (a, omega, theta)
        })
        .collect();
    let values = (0..window.len())
        .map(|v| {
            let r = window.norm(v);
            if r <= R_IN || r >= R_OUT {
                return 0.0;
            }
            let b = (-1.0 / ((r - R_IN) * (R_OUT - r))).exp();
            let x = window.position(v);
            let s: f64 = waves
                .iter()
                .map(|(a, om, th)| a * (om.iter().zip(x).map(|(o, y)| o * y).sum::<f64>() + th).cos())
                .sum();
            b * s
        })
        .collect();
    GridFunction::new(window, values)
}

/// The Carleman quadratic forms in conjugated variables `f = e^phi u` on the annulus vertices.
#[derive(Clone, Debug)]
pub struct CarlemanForms {
    pub tau: f64,
    /// Window ordinals of the annulus vertices; column `i` is vertex `support[i]`.
    pub support: Vec<usize>,
    /// `e^{phi_tau}` on the support.
    pub weight: Vec<f64>,
    /// Rows of `e^phi h^-2 Delta e^-phi` over `B_4`.
    pub l: SparseOperatorMatrix,
    /// `e^phi h^-1 D_j^s e^-phi`, one per generator.
    pub m: Vec<SparseOperatorMatrix>,
    /// `e^phi h^-2 (D_j^s)^2 e^-phi`, one per generator.
    pub n: Vec<SparseOperatorMatrix>,
}

impl CarlemanForms {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `f = e^phi u` on the support from a window function.
    pub fn conjugate(&self, u: &GridFunction) -> Vec<f64> {
        self.support.iter().zip(&self.weight).map(|(&v, e)| e * u.values()[v]).collect()
    }

    pub fn lhs(&self, f: &[f64]) -> f64 {
        let sq = |m: &SparseOperatorMatrix| m.apply(f).iter().map(|x| x * x).sum::<f64>();
        self.tau.powi(3) * f.iter().map(|x| x * x).sum::<f64>()
            + self.tau * self.m.iter().map(sq).sum::<f64>()
            + self.n.iter().map(sq).sum::<f64>() / self.tau
    }

    pub fn rhs(&self, f: &[f64]) -> f64 {
        self.l.apply(f).iter().map(|x| x * x).sum()
    }

    /// `P = tau^3 I + tau sum M_j^T M_j + tau^-1 sum N_j^T N_j`.
    pub fn p_matrix(&self) -> Result<SparseOperatorMatrix> {
        let mut p = SparseOperatorMatrix::identity(self.len()).scaled(self.tau.powi(3));
        for m in &self.m {
            p = p.add_scaled(&m.transpose().matmul(m)?, self.tau)?;
        }
        for n in &self.n {
            p = p.add_scaled(&n.transpose().matmul(n)?, 1.0 / self.tau)?;
        }
        Ok(p)
    }

    /// `Q = L^T L`.
    pub fn q_matrix(&self) -> Result<SparseOperatorMatrix> {
        self.l.transpose().matmul(&self.l)
    }
}

/// Assembles the conjugated Carleman forms for functions supported in `B_2 \ B_1/2`.
pub fn conjugated_forms(w: &CarlemanWeight, graph: &OnePointGraph, window: &VertexWindow) -> Result<CarlemanForms> {
    let support: Vec<usize> = (0..window.len()).filter(|&v| in_annulus(window.norm(v))).collect();
    let mut col = vec![usize::MAX; window.len()];
    for (i, &v) in support.iter().enumerate() {
        col[v] = i;
    }
    let mut phi = vec![f64::NAN; window.len()];
    let mut touched = vec![false; window.len()];
    let mut rows = Vec::new();
    for &v in &support {
        touched[v] = true;
        for j in 0..graph.k() {
            for sign in [1, -1] {
                touched[slot(window, v, 2 * j + usize::from(sign < 0))?] = true;
                touched[two_step(graph, window, v, j, sign)?] = true;
            }
        }
    }
    for v in 0..window.len() {
        if touched[v] {
            phi[v] = phi_at(w, window, v)?;
            rows.push(v);
        }
    }
    let weight: Vec<f64> = support.iter().map(|&v| phi[v].exp()).collect();
    let h = window.h;
    let k = graph.k();
    let mut tl = Vec::new();
    let mut tm = vec![Vec::new(); k];
    let mut tn = vec![Vec::new(); k];
    // Entry `e^{phi(x) - phi(y)} c` couples row x to column y when y is in the support.
    let entry = |x: usize, y: usize, c: f64, t: &mut Vec<(usize, usize, f64)>| {
        if col[y] != usize::MAX {
            t.push((x, col[y], (phi[x] - phi[y]).exp() * c));
        }
    };
    for &x in &rows {
        let lap_row = in_ball(window.norm(x), R_RHS);
        for j in 0..k {
            for (s, sign) in [(0, 1.0), (1, -1.0)] {
                if let Some(y) = window.neighbor_slot(x, 2 * j + s) {
                    entry(x, y, sign / h, &mut tm[j]);
                    if lap_row {
                        entry(x, y, 1.0 / (h * h), &mut tl);
                    }
                }
            }
            for sign in [1, -1] {
                if let Ok(y) = two_step(graph, window, x, j, sign) {
                    entry(x, y, 1.0 / (h * h), &mut tn[j]);
                }
            }
            entry(x, x, -2.0 / (h * h), &mut tn[j]);
        }
        if lap_row {
            entry(x, x, -2.0 * k as f64 / (h * h), &mut tl);
        }
    }
    let nrow = window.len();
    let ns = support.len();
    let l = SparseOperatorMatrix::from_triplets(nrow, ns, tl)?;
    let m = tm.into_iter().map(|t| SparseOperatorMatrix::from_triplets(nrow, ns, t)).collect::<Result<_>>()?;
    let n = tn.into_iter().map(|t| SparseOperatorMatrix::from_triplets(nrow, ns, t)).collect::<Result<_>>()?;
    Ok(CarlemanForms { tau: w.tau, support, weight, l, m, n })
}

/// Estimate of `sup lhs / rhs` over functions supported in the annulus.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SupEstimate {
    /// Largest ratio among the seed functions.
    pub raw_max: f64,
    /// Largest Ritz value after subspace iteration; a lower bound for the supremum.
    pub ritz: f64,
    /// Largest Ritz value after each iteration, starting with the span of the seeds.
    pub history: Vec<f64>,
}

/// Block subspace iteration for the pencil `P f = lambda Q f`, started from the seed functions.
pub fn carleman_sup_estimate(forms: &CarlemanForms, seeds: &[GridFunction], iterations: usize) -> Result<SupEstimate> {
    let n = forms.len();
    if n == 0 || seeds.is_empty() {
        return Err(Error::input("sup estimate needs a nonempty support and at least one seed"));
    }
    let p = forms.p_matrix()?;
    let q = forms.q_matrix()?;
    let llt = q
        .to_faer()
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::solver(format!("Cholesky of L^T L failed: {e:?}")))?;
    let b = seeds.len();
    let mut x = Mat::<f64>::zeros(n, b);
    let mut raw_max = f64::NEG_INFINITY;
    for (c, u) in seeds.iter().enumerate() {
        let f = forms.conjugate(u);
        let (num, den) = (forms.lhs(&f), forms.rhs(&f));
        if den > 0.0 {
            raw_max = raw_max.max(num / den);
        } else if num > 0.0 {
            raw_max = f64::INFINITY;
        }
        for (i, v) in f.iter().enumerate() {
            x[(i, c)] = *v;
        }
    }
    let mut history = vec![rayleigh_ritz(&p, &q, &mut x)?];
    for _ in 0..iterations {
        let b = x.ncols();
        let mut y = Mat::<f64>::zeros(n, b);
        for c in 0..b {
            let col: Vec<f64> = (0..n).map(|i| x[(i, c)]).collect();
            for (i, v) in p.apply(&col).into_iter().enumerate() {
                y[(i, c)] = v;
            }
        }
        llt.solve_in_place(y.as_mut());
        x = y;
        history.push(rayleigh_ritz(&p, &q, &mut x)?);
    }
    let ritz = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SupEstimate { raw_max, ritz, history })
}

/// Projects the pencil onto `span(x)`, replaces `x` by Q-orthonormal Ritz vectors (dropping dependent
/// directions) and returns the top value.
fn rayleigh_ritz(p: &SparseOperatorMatrix, q: &SparseOperatorMatrix, x: &mut Mat<f64>) -> Result<f64> {
    let (n, b) = (x.nrows(), x.ncols());
    let apply = |m: &SparseOperatorMatrix| {
        let mut out = Mat::<f64>::zeros(n, b);
        for c in 0..b {
            let col: Vec<f64> = (0..n).map(|i| x[(i, c)]).collect();
            for (i, v) in m.apply(&col).into_iter().enumerate() {
                out[(i, c)] = v;
            }
        }
        out
    };
    let pr = x.transpose() * apply(p);
    let qr = x.transpose() * apply(q);
    let sym = |m: Mat<f64>| Mat::<f64>::from_fn(m.nrows(), m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let (qs, qv) = sym_eigen(&sym(qr))?;
    let top = qs.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..b).filter(|&i| qs[i] > 1e-12 * top).collect();
    if keep.is_empty() {
        return Err(Error::solver("subspace collapsed during Rayleigh-Ritz"));
    }
    // Whitening basis W with W^T Q_r W = I.
    let wm = Mat::<f64>::from_fn(b, keep.len(), |i, c| qv[(i, keep[c])] / qs[keep[c]].sqrt());
    let pw = wm.transpose() * sym(pr) * &wm;
    let (ps, pv) = sym_eigen(&sym(pw))?;
    let coeffs = &wm * &pv;
    let nx = &*x * &coeffs;
    *x = nx;
    Ok(ps.last().copied().unwrap_or(f64::NAN))
}
