//! Difference operators, Laplacians and Schrodinger operators on vertex windows.

mod fourier;
mod matrix;
mod potentials;

pub use fourier::{multiplier_check, parseval_check, torus_dft, MultiplierCheck};
pub use matrix::SparseOperatorMatrix;
pub use potentials::{constant_potential, potential_from_csv, radial_potential, uniform_potential};

use crate::graph_core::{MultiPointGraph, OnePointGraph, VertexWindow};
use crate::{Error, Result};

/// A real function on the vertices of a window, aligned with window ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
    h: f64,
}

impl GridFunction {
    pub fn new(window: &VertexWindow, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::input(format!(
                "grid function has {} values but the window has {} vertices",
                values.len(),
                window.len()
            )));
        }
        if let Some(v) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::input(format!("grid function value at vertex {v} is not finite")));
        }
        Ok(Self { values, h: window.h })
    }

    pub fn zeros(window: &VertexWindow) -> Self {
        Self { values: vec![0.0; window.len()], h: window.h }
    }

    /// Samples `f` at vertex positions.
    pub fn from_fn(window: &VertexWindow, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let values = (0..window.len()).map(|v| f(window.position(v))).collect();
        Self::new(window, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { values: self.values.iter().map(|v| a * v).collect(), h: self.h }
    }

    pub(crate) fn check_window(&self, window: &VertexWindow) -> Result<()> {
        if self.values.len() != window.len() {
            return Err(Error::input("grid function is not aligned with the window"));
        }
        Ok(())
    }
}

/// Lattice offsets `sum_j alpha_j e_j` with `sum_j |alpha_j| <= L`, stored in lattice coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PathClass {
    pub l: usize,
    pub offsets: Vec<Vec<i64>>,
}

impl PathClass {
    pub fn new(graph: &OnePointGraph, l: usize) -> Self {
        let d = graph.dim();
        let mut frontier = vec![vec![0i64; d]];
        let mut all = frontier.clone();
        for _ in 0..l {
            let mut next = Vec::new();
            for o in &frontier {
                for c in graph.generator_coords() {
                    for sign in [1i64, -1] {
                        next.push(o.iter().zip(c).map(|(a, b)| a + sign * b).collect::<Vec<_>>());
                    }
                }
            }
            next.sort();
            next.dedup();
            all.extend(next.iter().cloned());
            frontier = next;
        }
        all.sort();
        all.dedup();
        Self { l, offsets: all }
    }

    /// Path class with explicit offsets (used by reductions); the zero offset need not be present.
    pub fn from_offsets(l: usize, mut offsets: Vec<Vec<i64>>) -> Self {
        offsets.sort();
        offsets.dedup();
        Self { l, offsets }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Potentials `V_e` (one per path offset) and magnetic fields `B_j` (one per generator).
#[derive(Clone, Debug)]
pub struct SchrodingerData {
    pub paths: PathClass,
    pub potentials: Vec<GridFunction>,
    pub magnetic: Vec<GridFunction>,
    m: f64,
}

impl SchrodingerData {
    pub fn new(paths: PathClass, potentials: Vec<GridFunction>, magnetic: Vec<GridFunction>) -> Result<Self> {
        if potentials.len() != paths.len() {
            return Err(Error::input(format!(
                "{} potentials given for {} path offsets",
                potentials.len(),
                paths.len()
            )));
        }
        let m = potentials
            .iter()
            .chain(&magnetic)
            .map(GridFunction::sup_norm)
            .fold(0.0, f64::max);
        Ok(Self { paths, potentials, magnetic, m })
    }

    /// Free operator: all potentials and fields vanish.
    pub fn zero(graph: &OnePointGraph, window: &VertexWindow, l: usize) -> Self {
        let paths = PathClass::new(graph, l);
        let potentials = vec![GridFunction::zeros(window); paths.len()];
        let magnetic = vec![GridFunction::zeros(window); graph.k()];
        Self { paths, potentials, magnetic, m: 0.0 }
    }

    /// Single on-site potential `V_0` with no magnetic field.
    pub fn on_site(graph: &OnePointGraph, window: &VertexWindow, v0: GridFunction) -> Result<Self> {
        let paths = PathClass::new(graph, 0);
        Self::new(paths, vec![v0], vec![GridFunction::zeros(window); graph.k()])
    }

    /// The bound `M`: largest sup-norm among all potentials and fields.
    pub fn bound(&self) -> f64 {
        self.m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffVariant {
    Plus,
    Minus,
    Symmetric,
}

/// Difference operator used for the magnetic term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagneticVariant {
    #[default]
    Symmetric,
    Forward,
}

fn stencil_err(v: usize, what: impl Into<String>) -> Error {
    Error::Stencil { vertex: v, missing: what.into() }
}

fn neighbor(window: &VertexWindow, v: usize, j: usize, sign: i64, steps: i64, graph: &OnePointGraph) -> Result<usize> {
    if steps == 1 {
        return window
            .neighbor_slot(v, 2 * j + usize::from(sign < 0))
            .ok_or_else(|| stencil_err(v, format!("{}e_{}", if sign > 0 { "+" } else { "-" }, j + 1)));
    }
    let shift: Vec<i64> = graph.generator_coords()[j].iter().map(|c| sign * steps * c).collect();
    window
        .shifted(v, &shift, 0)
        .ok_or_else(|| stencil_err(v, format!("{}{}e_{}", if sign > 0 { "+" } else { "-" }, steps, j + 1)))
}

/// `sum_{y ~ x} (u(y) - u(x))`, unscaled.
pub fn apply_laplacian(graph: &MultiPointGraph, window: &VertexWindow, u: &GridFunction, v: usize) -> Result<f64> {
    u.check_window(window)?;
    let x = u.values[v];
    let mut acc = 0.0;
    for (rule, n) in window.neighbors(v) {
        let y = n.ok_or_else(|| {
            let r = &graph.rules()[rule];
            stencil_err(v, format!("class {} at shift {:?}", r.to + 1, r.shift))
        })?;
        acc += u.values[y] - x;
    }
    Ok(acc)
}

/// `D_j^+`, `D_j^-` or `D_j^s` of `u` at vertex `v`, unscaled.
pub fn apply_diff(
    graph: &OnePointGraph,
    window: &VertexWindow,
    u: &GridFunction,
    v: usize,
    j: usize,
    variant: DiffVariant,
) -> Result<f64> {
    u.check_window(window)?;
    if j >= graph.k() {
        return Err(Error::input(format!("generator index {} out of range", j + 1)));
    }
    let f = &u.values;
    Ok(match variant {
        DiffVariant::Plus => f[neighbor(window, v, j, 1, 1, graph)?] - f[v],
        DiffVariant::Minus => f[v] - f[neighbor(window, v, j, -1, 1, graph)?],
        DiffVariant::Symmetric => f[neighbor(window, v, j, 1, 1, graph)?] - f[neighbor(window, v, j, -1, 1, graph)?],
    })
}

/// `(D_j^s)^2 u(x) = u(x + 2he_j) - 2u(x) + u(x - 2he_j)`.
pub fn apply_double_symmetric(
    graph: &OnePointGraph,
    window: &VertexWindow,
    u: &GridFunction,
    v: usize,
    j: usize,
) -> Result<f64> {
    u.check_window(window)?;
    let f = &u.values;
    let p = neighbor(window, v, j, 1, 2, graph)?;
    let m = neighbor(window, v, j, -1, 2, graph)?;
    Ok(f[p] - 2.0 * f[v] + f[m])
}

/// `(D_s u(x), D_s^2 u(x))`: Euclidean aggregates over generators of `D_j^s u` and `(D_j^s)^2 u`.
pub fn ds_norms(graph: &OnePointGraph, window: &VertexWindow, u: &GridFunction, v: usize) -> Result<(f64, f64)> {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for j in 0..graph.k() {
        s1 += apply_diff(graph, window, u, v, j, DiffVariant::Symmetric)?.powi(2);
        s2 += apply_double_symmetric(graph, window, u, v, j)?.powi(2);
    }
    Ok((s1.sqrt(), s2.sqrt()))
}

/// Unscaled graph Laplacian on rows with a complete stencil; rows with missing neighbors are zero.
pub fn laplacian_matrix(window: &VertexWindow) -> SparseOperatorMatrix {
    let mut t = Vec::new();
    for v in 0..window.len() {
        let nbrs: Vec<Option<usize>> = window.neighbors(v).map(|(_, n)| n).collect();
        if nbrs.iter().any(Option::is_none) {
            continue;
        }
        for n in nbrs.into_iter().flatten() {
            t.push((v, n, 1.0));
            t.push((v, v, -1.0));
        }
    }
    SparseOperatorMatrix::from_triplets(window.len(), window.len(), t).expect("window indices in range")
}

/// Unscaled `D_j^+`, `D_j^-` or `D_j^s` as a matrix; rows lacking a required neighbor are zero.
pub fn diff_matrix(
    graph: &OnePointGraph,
    window: &VertexWindow,
    j: usize,
    variant: DiffVariant,
) -> Result<SparseOperatorMatrix> {
    if j >= graph.k() {
        return Err(Error::input(format!("generator index {} out of range", j + 1)));
    }
    let mut t = Vec::new();
    for v in 0..window.len() {
        let p = window.neighbor_slot(v, 2 * j);
        let m = window.neighbor_slot(v, 2 * j + 1);
        match variant {
            DiffVariant::Plus => {
                if let Some(p) = p {
                    t.extend([(v, p, 1.0), (v, v, -1.0)]);
                }
            }
            DiffVariant::Minus => {
                if let Some(m) = m {
                    t.extend([(v, v, 1.0), (v, m, -1.0)]);
                }
            }
            DiffVariant::Symmetric => {
                if let (Some(p), Some(m)) = (p, m) {
                    t.extend([(v, p, 1.0), (v, m, -1.0)]);
                }
            }
        }
    }
    SparseOperatorMatrix::from_triplets(window.len(), window.len(), t)
}

fn check_symmetric_interior(m: &mut SparseOperatorMatrix, window: &VertexWindow) {
    let interior = window.interior_vertices();
    let tol = 1e-12 * m.max_abs().max(1.0);
    m.symmetric = m.symmetry_defect(&interior, 1.0) <= tol;
}

/// Assembles `H u = h^-2 Delta u + h^-1 sum_j B_j D_j u + sum_e V_e(x + he) u(x + he)` on interior rows,
/// with identity rows on the boundary.
pub fn assemble_schrodinger(
    graph: &OnePointGraph,
    data: &SchrodingerData,
    window: &VertexWindow,
    variant: MagneticVariant,
) -> Result<SparseOperatorMatrix> {
    let h = window.h;
    let need = data.paths.l.max(1);
    if window.collar < need {
        return Err(Error::input(format!("window collar {} is below the required depth {need}", window.collar)));
    }
    for f in data.potentials.iter().chain(&data.magnetic) {
        f.check_window(window)
            .map_err(|_| Error::input("potential fields are not aligned with the window"))?;
    }
    if !data.magnetic.is_empty() && data.magnetic.len() != graph.k() {
        return Err(Error::input(format!(
            "{} magnetic fields given for {} generators",
            data.magnetic.len(),
            graph.k()
        )));
    }
    let k = graph.k();
    let (h1, h2) = (1.0 / h, 1.0 / (h * h));
    let mut t = Vec::with_capacity(window.len() * (1 + 4 * k + data.paths.len()));
    for v in 0..window.len() {
        if !window.is_interior(v) {
            t.push((v, v, 1.0));
            continue;
        }
        for j in 0..k {
            let p = neighbor(window, v, j, 1, 1, graph)?;
            let m = neighbor(window, v, j, -1, 1, graph)?;
            t.extend([(v, p, h2), (v, m, h2), (v, v, -2.0 * h2)]);
            if let Some(b) = data.magnetic.get(j) {
                let bv = h1 * b.values[v];
                if bv != 0.0 {
                    match variant {
                        MagneticVariant::Symmetric => t.extend([(v, p, bv), (v, m, -bv)]),
                        MagneticVariant::Forward => t.extend([(v, p, bv), (v, v, -bv)]),
                    }
                }
            }
        }
        for (o, pot) in data.paths.offsets.iter().zip(&data.potentials) {
            let y = window
                .shifted(v, o, 0)
                .ok_or_else(|| stencil_err(v, format!("path offset {o:?}")))?;
            let val = pot.values[y];
            if val != 0.0 {
                t.push((v, y, val));
            }
        }
    }
    let mut m = SparseOperatorMatrix::from_triplets(window.len(), window.len(), t)?;
    check_symmetric_interior(&mut m, window);
    Ok(m)
}

/// Assembles `h^-2 Delta + V` on a multi-point window, identity rows on the boundary.
pub fn assemble_multipoint(window: &VertexWindow, potential: &GridFunction) -> Result<SparseOperatorMatrix> {
    potential.check_window(window)?;
    let h2 = 1.0 / (window.h * window.h);
    let mut t = Vec::new();
    for v in 0..window.len() {
        if !window.is_interior(v) {
            t.push((v, v, 1.0));
            continue;
        }
        for (_, n) in window.neighbors(v) {
            let n = n.ok_or_else(|| stencil_err(v, "edge neighbor"))?;
            t.extend([(v, n, h2), (v, v, -h2)]);
        }
        if potential.values[v] != 0.0 {
            t.push((v, v, potential.values[v]));
        }
    }
    let mut m = SparseOperatorMatrix::from_triplets(window.len(), window.len(), t)?;
    check_symmetric_interior(&mut m, window);
    Ok(m)
}

/// Pointwise evaluation of the Schrodinger operator at an interior vertex, independent of assembly.
pub fn apply_schrodinger(
    graph: &OnePointGraph,
    data: &SchrodingerData,
    window: &VertexWindow,
    u: &GridFunction,
    v: usize,
    variant: MagneticVariant,
) -> Result<f64> {
    let h = window.h;
    let lap = apply_laplacian(graph.as_periodic(), window, u, v)?;
    let mut acc = lap / (h * h);
    for (j, b) in data.magnetic.iter().enumerate() {
        let d = match variant {
            MagneticVariant::Symmetric => apply_diff(graph, window, u, v, j, DiffVariant::Symmetric)?,
            MagneticVariant::Forward => apply_diff(graph, window, u, v, j, DiffVariant::Plus)?,
        };
        acc += b.values[v] * d / h;
    }
    for (o, pot) in data.paths.offsets.iter().zip(&data.potentials) {
        let y = window
            .shifted(v, o, 0)
            .ok_or_else(|| stencil_err(v, format!("path offset {o:?}")))?;
        acc += pot.values[y] * u.values[y];
    }
    Ok(acc)
}
