//! Periodic graphs, their Gram-matrix norm and finite vertex windows.
//!
//! Positions are stored in unscaled graph units. A vertex with lattice index `n`
//! in class `i` sits at `h * (p_i + sum_l n_l v_l)`.

mod presets;
mod spec_file;
mod validate;
mod window;

pub use presets::{preset, preset_names, Preset, ONE_POINT_PRESETS, MULTI_POINT_PRESETS};
pub use spec_file::{EdgeSpec, GraphSpec, RuleSpec};
pub use validate::{validate, InvariantCheck, ValidationReport};
pub use window::{enumerate_window, enumerate_window_with_budget, in_ball, VertexWindow, DEFAULT_VERTEX_BUDGET};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance used to decide lattice membership of real vectors.
const LATTICE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct LatticeBasis {
    vectors: Vec<Vec<f64>>,
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl LatticeBasis {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let d = vectors.len();
        if d == 0 {
            return Err(Error::input("lattice basis needs at least one vector"));
        }
        if vectors.iter().any(|v| v.len() != d) {
            return Err(Error::input(format!("basis vectors must all have length {d}")));
        }
        if vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::input("basis vectors must be finite"));
        }
        let matrix = DMatrix::from_fn(d, d, |i, j| vectors[j][i]);
        let scale: f64 = vectors
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .product();
        let det = matrix.determinant();
        if scale == 0.0 || det.abs() <= 1e-12 * scale {
            return Err(Error::input("basis vectors are linearly dependent (zero determinant)"));
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::input("basis matrix is not invertible"))?;
        Ok(Self { vectors, matrix, inverse })
    }

    pub fn standard(d: usize) -> Self {
        let vectors = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(vectors).expect("identity basis is valid")
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Matrix whose columns are the basis vectors.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn point(&self, n: &[i64]) -> DVector<f64> {
        let nv = DVector::from_iterator(n.len(), n.iter().map(|&x| x as f64));
        &self.matrix * nv
    }

    pub fn lattice_coords(&self, x: &[f64]) -> DVector<f64> {
        &self.inverse * DVector::from_column_slice(x)
    }

    /// Integer coordinates of `x` in the basis, if `x` is a lattice vector.
    pub fn integer_coords(&self, x: &[f64]) -> Option<Vec<i64>> {
        let c = self.lattice_coords(x);
        let mut out = Vec::with_capacity(c.len());
        for v in c.iter() {
            let r = v.round();
            if (v - r).abs() > LATTICE_TOL * (1.0 + v.abs()) {
                return None;
            }
            out.push(r as i64);
        }
        Some(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.vectors.iter().map(|v| v.iter().map(|x| x * s).collect()).collect())
            .expect("scaling a valid basis by a nonzero factor stays valid")
    }

    /// Largest singular value of the inverse basis matrix.
    pub(crate) fn inverse_norm(&self) -> f64 {
        self.inverse.clone().singular_values().max()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    General,
    HexagonalType,
    Star,
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GraphKind::General => "general",
            GraphKind::HexagonalType => "hexagonal_type",
            GraphKind::Star => "star",
        })
    }
}

/// Edge `x -> x + h (p_to - p_from + B shift)` for every `x` in class `from`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeRule {
    pub from: usize,
    pub to: usize,
    pub shift: Vec<i64>,
}

impl EdgeRule {
    pub fn new(from: usize, to: usize, shift: Vec<i64>) -> Self {
        Self { from, to, shift }
    }

    pub fn reversed(&self) -> Self {
        Self { from: self.to, to: self.from, shift: self.shift.iter().map(|s| -s).collect() }
    }
}

/// Gram matrix together with its inverse and condition number.
#[derive(Clone, Debug)]
pub struct Metric {
    pub gram: DMatrix<f64>,
    pub gram_inverse: DMatrix<f64>,
    pub condition: f64,
}

impl Metric {
    /// Inverts a symmetric positive definite Gram matrix through its Cholesky factor.
    pub fn from_gram(gram: DMatrix<f64>) -> Result<Self> {
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::input("Gram matrix is not positive definite (generators do not span)"))?;
        let gram_inverse = chol.inverse();
        let eig = gram.clone().symmetric_eigenvalues();
        let condition = eig.max() / eig.min();
        let id = &gram_inverse * &gram;
        let d = gram.nrows();
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                if (id[(i, j)] - target).abs() > 1e-12 * condition.max(1.0) {
                    return Err(Error::input("Gram inverse check failed"));
                }
            }
        }
        Ok(Self { gram, gram_inverse, condition })
    }

    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let mut s = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.gram_inverse[(i, j)] * x[j];
            }
            s += x[i] * row;
        }
        s.max(0.0)
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.norm_sq(x).sqrt()
    }
}

/// A periodic graph with `s` point classes.
#[derive(Clone, Debug)]
pub struct MultiPointGraph {
    pub name: String,
    basis: LatticeBasis,
    points: Vec<Vec<f64>>,
    rules: Vec<EdgeRule>,
    kind: GraphKind,
    metric: Option<Metric>,
}

impl MultiPointGraph {
    /// Builds the graph after shape checks only; structural invariants are left to [`validate`].
    pub fn new(
        name: impl Into<String>,
        basis: LatticeBasis,
        points: Vec<Vec<f64>>,
        rules: Vec<EdgeRule>,
        kind: GraphKind,
    ) -> Result<Self> {
        let d = basis.dim();
        if points.is_empty() {
            return Err(Error::input("graph needs at least one point class"));
        }
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::input(format!("point offsets must have length {d}")));
        }
        if points[0].iter().any(|&x| x != 0.0) {
            return Err(Error::input("the first point offset must be the origin"));
        }
        let s = points.len();
        for r in &rules {
            if r.from >= s || r.to >= s {
                return Err(Error::input(format!("edge rule references class outside 1..={s}")));
            }
            if r.shift.len() != d {
                return Err(Error::input(format!("edge rule shift must have length {d}")));
            }
        }
        let mut g = Self { name: name.into(), basis, points, rules, kind, metric: None };
        g.metric = g.average_edge_gram().and_then(|m| Metric::from_gram(m).ok());
        Ok(g)
    }

    /// One-point graph with rules `+e_j, -e_j` in generator order.
    pub fn from_generators(name: impl Into<String>, basis: LatticeBasis, coords: &[Vec<i64>]) -> Result<Self> {
        let d = basis.dim();
        let mut rules = Vec::with_capacity(2 * coords.len());
        for c in coords {
            rules.push(EdgeRule::new(0, 0, c.clone()));
            rules.push(EdgeRule::new(0, 0, c.iter().map(|x| -x).collect()));
        }
        Self::new(name, basis, vec![vec![0.0; d]], rules, GraphKind::General)
    }

    fn average_edge_gram(&self) -> Option<DMatrix<f64>> {
        let d = self.dim();
        if self.rules.is_empty() {
            return None;
        }
        let mut g = DMatrix::zeros(d, d);
        for r in &self.rules {
            let v = self.displacement(r);
            g += &v * v.transpose();
        }
        Some(g / (2.0 * self.num_classes() as f64))
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &LatticeBasis {
        &self.basis
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn num_classes(&self) -> usize {
        self.points.len()
    }

    pub fn rules(&self) -> &[EdgeRule] {
        &self.rules
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn set_kind(&mut self, kind: GraphKind) {
        self.kind = kind;
    }

    pub fn metric(&self) -> Option<&Metric> {
        self.metric.as_ref()
    }

    /// Edge vector of a rule in unit mesh.
    pub fn displacement(&self, r: &EdgeRule) -> DVector<f64> {
        let p = DVector::from_column_slice(&self.points[r.to]) - DVector::from_column_slice(&self.points[r.from]);
        p + self.basis.point(&r.shift)
    }

    /// Position of `(n, class)` at mesh `h`.
    pub fn position(&self, n: &[i64], class: usize, h: f64) -> DVector<f64> {
        (self.basis.point(n) + DVector::from_column_slice(&self.points[class])) * h
    }

    pub fn degree(&self, class: usize) -> usize {
        self.rules.iter().filter(|r| r.from == class).count()
    }
}

/// A periodic graph with a single point class and generators `e_1..e_k`.
#[derive(Clone, Debug)]
pub struct OnePointGraph {
    pub name: String,
    basis: LatticeBasis,
    generators: Vec<DVector<f64>>,
    coords: Vec<Vec<i64>>,
    metric: Metric,
    e_matrix: DMatrix<f64>,
    periodic: MultiPointGraph,
}

impl OnePointGraph {
    /// Generators given in Cartesian coordinates; each must be a lattice vector.
    pub fn new(name: impl Into<String>, basis: LatticeBasis, generators: Vec<Vec<f64>>) -> Result<Self> {
        let d = basis.dim();
        let mut coords = Vec::with_capacity(generators.len());
        for (j, e) in generators.iter().enumerate() {
            if e.len() != d {
                return Err(Error::input(format!("generator {} has length {}, expected {d}", j + 1, e.len())));
            }
            let c = basis
                .integer_coords(e)
                .ok_or_else(|| Error::input(format!("generator {} is not a lattice vector", j + 1)))?;
            coords.push(c);
        }
        Self::from_lattice_coords(name, basis, coords)
    }

    pub fn from_lattice_coords(name: impl Into<String>, basis: LatticeBasis, coords: Vec<Vec<i64>>) -> Result<Self> {
        let name = name.into();
        let d = basis.dim();
        if coords.is_empty() {
            return Err(Error::input("one-point graph needs at least one generator"));
        }
        for (j, c) in coords.iter().enumerate() {
            if c.len() != d {
                return Err(Error::input(format!("generator {} has length {}, expected {d}", j + 1, c.len())));
            }
            if c.iter().all(|&x| x == 0) {
                return Err(Error::input(format!("generator {} is the zero vector", j + 1)));
            }
            for (i, b) in coords.iter().enumerate().take(j) {
                let neg: Vec<i64> = b.iter().map(|x| -x).collect();
                if b == c || &neg == c {
                    return Err(Error::input(format!("generators {} and {} coincide up to sign", i + 1, j + 1)));
                }
            }
        }
        let generators: Vec<DVector<f64>> = coords.iter().map(|c| basis.point(c)).collect();
        let k = generators.len();
        let e_matrix = DMatrix::from_fn(k, d, |j, i| generators[j][i]);
        let gram = e_matrix.transpose() * &e_matrix;
        let metric = Metric::from_gram(gram)?;
        let periodic = MultiPointGraph::from_generators(name.clone(), basis.clone(), &coords)?.with_metric(metric.clone());
        Ok(Self { name, basis, generators, coords, metric, e_matrix, periodic })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn k(&self) -> usize {
        self.generators.len()
    }

    pub fn basis(&self) -> &LatticeBasis {
        &self.basis
    }

    pub fn generator(&self, j: usize) -> &DVector<f64> {
        &self.generators[j]
    }

    pub fn generators(&self) -> &[DVector<f64>] {
        &self.generators
    }

    /// Integer coordinates of the generators in the lattice basis.
    pub fn generator_coords(&self) -> &[Vec<i64>] {
        &self.coords
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.metric.gram
    }

    pub fn gram_inverse(&self) -> &DMatrix<f64> {
        &self.metric.gram_inverse
    }

    pub fn gram_condition(&self) -> f64 {
        self.metric.condition
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    /// The k x d matrix whose rows are the generators.
    pub fn e_matrix(&self) -> &DMatrix<f64> {
        &self.e_matrix
    }

    /// The same graph seen as a periodic graph with one class; rule `2j` is `+e_j`, rule `2j+1` is `-e_j`.
    pub fn as_periodic(&self) -> &MultiPointGraph {
        &self.periodic
    }

    pub fn gamma_norm(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::input(format!("vector has length {}, graph dimension is {}", x.len(), self.dim())));
        }
        Ok(self.metric.norm(x))
    }

    /// Scales lattice and generators by `sigma`.
    pub fn scaled(&self, sigma: f64) -> Self {
        Self::from_lattice_coords(self.name.clone(), self.basis.scaled(sigma), self.coords.clone())
            .expect("scaling a valid graph keeps it valid")
    }

    pub fn max_generator_length(&self) -> f64 {
        self.generators.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }
}

/// Rescales so that the longest generator has Euclidean length `1/(8 sqrt d)`.
///
/// Gamma-norms of lattice positions are unchanged because lattice and generators
/// scale together; only fixed vectors `x` see their norm scaled by `1/sigma`.
pub fn canonical_rescale(graph: &OnePointGraph) -> (OnePointGraph, f64) {
    let d = graph.dim() as f64;
    let sigma = 1.0 / (8.0 * d.sqrt() * graph.max_generator_length());
    (graph.scaled(sigma), sigma)
}

/// Gamma-norm of `x` for a one-point graph.
pub fn gamma_norm(graph: &OnePointGraph, x: &[f64]) -> Result<f64> {
    graph.gamma_norm(x)
}
