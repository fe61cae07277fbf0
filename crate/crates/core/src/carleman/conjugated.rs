use nalgebra::DVector;

use super::CarlemanWeight;
use crate::graph_core::{OnePointGraph, VertexWindow};
use crate::operators::{GridFunction, SparseOperatorMatrix};
use crate::{Error, Result};

/// `phi_tau` at window vertex `v`, refusing the origin.
pub(crate) fn phi_at(w: &CarlemanWeight, window: &VertexWindow, v: usize) -> Result<f64> {
    let t = window.norm(v);
    if t == 0.0 {
        return Err(Error::domain(format!("vertex {v} is the origin, where the weight is singular")));
    }
    w.phi_tau_radial(t)
}

/// `phi_tau` at an arbitrary point, refusing the origin.
fn phi_point(w: &CarlemanWeight, graph: &OnePointGraph, x: &[f64]) -> Result<f64> {
    let t = graph.gamma_norm(x)?;
    if t == 0.0 {
        return Err(Error::domain(format!("stencil point {x:?} is the origin, where the weight is singular")));
    }
    w.phi_tau_radial(t)
}

fn stencil(window: &VertexWindow, graph: &OnePointGraph, v: usize) -> Result<Vec<usize>> {
    (0..2 * graph.k())
        .map(|s| {
            window.neighbor_slot(v, s).ok_or_else(|| Error::Stencil {
                vertex: v,
                missing: format!("{}e_{}", if s % 2 == 0 { "+" } else { "-" }, s / 2 + 1),
            })
        })
        .collect()
}

/// `L_phi f(x)` through the cosh/sinh expansion.
pub fn conjugated_apply(
    w: &CarlemanWeight,
    graph: &OnePointGraph,
    window: &VertexWindow,
    f: &GridFunction,
    v: usize,
) -> Result<f64> {
    let nb = stencil(window, graph, v)?;
    let fv = f.values();
    let px = phi_at(w, window, v)?;
    let h2 = window.h * window.h;
    let mut acc = -2.0 * graph.k() as f64 * fv[v];
    for j in 0..graph.k() {
        let (p, m) = (nb[2 * j], nb[2 * j + 1]);
        let dp = phi_at(w, window, p)? - px;
        let dm = px - phi_at(w, window, m)?;
        acc += (dp.cosh() - dp.sinh()) * fv[p] + (dm.cosh() + dm.sinh()) * fv[m];
    }
    Ok(acc / h2)
}

/// `e^{phi} h^-2 Delta (e^{-phi} f)` at `x`, evaluated by direct composition.
pub fn conjugated_apply_naive(
    w: &CarlemanWeight,
    graph: &OnePointGraph,
    window: &VertexWindow,
    f: &GridFunction,
    v: usize,
) -> Result<f64> {
    let nb = stencil(window, graph, v)?;
    let fv = f.values();
    let px = phi_at(w, window, v)?;
    let ux = (-px).exp() * fv[v];
    let mut acc = 0.0;
    for &y in &nb {
        acc += (-phi_at(w, window, y)?).exp() * fv[y] - ux;
    }
    Ok(px.exp() * acc / (window.h * window.h))
}

/// Symmetric and antisymmetric parts of `L_phi` restricted to the active vertex set.
#[derive(Clone, Debug)]
pub struct SplitOperators {
    /// Window ordinals of the active vertices; matrix index `i` is vertex `active[i]`.
    pub active: Vec<usize>,
    pub s: SparseOperatorMatrix,
    pub a: SparseOperatorMatrix,
}

impl SplitOperators {
    /// `S + A`.
    pub fn l(&self) -> SparseOperatorMatrix {
        self.s.add_scaled(&self.a, 1.0).expect("matching shapes")
    }

    /// Restriction of a window function to the active set; fails if mass lies outside it.
    pub fn restrict(&self, window: &VertexWindow, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != window.len() {
            return Err(Error::input("function length does not match the window"));
        }
        let mut mask = vec![false; u.len()];
        for &v in &self.active {
            mask[v] = true;
        }
        if let Some(v) = (0..u.len()).find(|&v| !mask[v] && u[v] != 0.0) {
            return Err(Error::input(format!("function is nonzero at vertex {v} outside the active set")));
        }
        Ok(self.active.iter().map(|&v| u[v]).collect())
    }
}

/// Assembles `S` and `A` on depth-1 interior vertices with `|x|_Gamma >= r_in`; entries to
/// neighbours outside that set are dropped, which preserves the (anti)symmetry.
pub fn split_sa(w: &CarlemanWeight, graph: &OnePointGraph, window: &VertexWindow, r_in: f64) -> Result<SplitOperators> {
    let active: Vec<usize> =
        (0..window.len()).filter(|&v| window.is_interior(v) && window.norm(v) >= r_in).collect();
    let mut pos = vec![usize::MAX; window.len()];
    for (i, &v) in active.iter().enumerate() {
        pos[v] = i;
    }
    let h2 = window.h * window.h;
    let diag = -2.0 * graph.k() as f64 / h2;
    let mut ts = Vec::new();
    let mut ta = Vec::new();
    for (i, &v) in active.iter().enumerate() {
        let px = phi_at(w, window, v)?;
        ts.push((i, i, diag));
        for y in stencil(window, graph, v)? {
            let d = px - phi_at(w, window, y)?;
            if pos[y] != usize::MAX {
                ts.push((i, pos[y], d.cosh() / h2));
                ta.push((i, pos[y], d.sinh() / h2));
            }
        }
    }
    let n = active.len();
    let mut s = SparseOperatorMatrix::from_triplets(n, n, ts)?;
    s.symmetric = true;
    let a = SparseOperatorMatrix::from_triplets(n, n, ta)?;
    Ok(SplitOperators { active, s, a })
}

/// `<[S, A] u, u> = 2 u^T S A u` for real `u` on the active set.
pub fn commutator_form_matrix(ops: &SplitOperators, u: &[f64]) -> f64 {
    let au = ops.a.apply(u);
    let sau = ops.s.apply(&au);
    2.0 * u.iter().zip(&sau).map(|(a, b)| a * b).sum::<f64>()
}

/// `h^-4 sum_x sum_{i,j} sum_{alpha,beta} alpha beta sinh(D_i^alpha D_j^beta phi) cosh(D_{ij}^{alpha beta} phi)
/// f(x + alpha h e_i) f(x + beta h e_j)`, with `f` a window function vanishing outside the window interior.
pub fn commutator_form_closed(
    w: &CarlemanWeight,
    graph: &OnePointGraph,
    window: &VertexWindow,
    f: &GridFunction,
) -> Result<f64> {
    let fv = f.values();
    let k = graph.k();
    let h = window.h;
    let d = graph.dim();
    let mut total = 0.0;
    let mut shifted = vec![0.0; d];
    for v in 0..window.len() {
        // f at x + alpha h e_i for every slot; a missing neighbour requires f = 0 there.
        let mut vals = vec![0.0; 2 * k];
        let mut any = false;
        for (s, val) in vals.iter_mut().enumerate() {
            if let Some(y) = window.neighbor_slot(v, s) {
                *val = fv[y];
                any |= *val != 0.0;
            }
        }
        if !any {
            continue;
        }
        let x = DVector::from_column_slice(window.position(v));
        let p0 = phi_point(w, graph, x.as_slice())?;
        let mut p1 = vec![0.0; 2 * k];
        for (s, p) in p1.iter_mut().enumerate() {
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            let y = &x + graph.generator(s / 2) * (sign * h);
            *p = phi_point(w, graph, y.as_slice())?;
        }
        for si in 0..2 * k {
            if vals[si] == 0.0 {
                continue;
            }
            let (i, alpha) = (si / 2, if si % 2 == 0 { 1.0 } else { -1.0 });
            for sj in 0..2 * k {
                if vals[sj] == 0.0 {
                    continue;
                }
                let (j, beta) = (sj / 2, if sj % 2 == 0 { 1.0 } else { -1.0 });
                for l in 0..d {
                    shifted[l] = x[l] + h * (alpha * graph.generator(i)[l] + beta * graph.generator(j)[l]);
                }
                // Opposite steps along the same generator return exactly to x.
                let p2 = if i == j && alpha != beta {
                    p0
                } else {
                    phi_point(w, graph, &shifted)?
                };
                // D_i^alpha D_j^beta phi = alpha beta (phi(x+a+b) - phi(x+a) - phi(x+b) + phi(x)).
                let mixed = alpha * beta * (p2 - p1[si] - p1[sj] + p0);
                let dab = p2 - p0;
                total += alpha * beta * mixed.sinh() * dab.cosh() * vals[si] * vals[sj];
            }
        }
    }
    Ok(total / h.powi(4))
}
