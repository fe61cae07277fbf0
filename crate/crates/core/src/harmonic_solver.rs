//! Solutions of `H u = 0` on vertex windows with Dirichlet boundary data.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph_core::VertexWindow;
use crate::linalg::{self, masked_norm, max_abs};
use crate::operators::{GridFunction, SparseOperatorMatrix};
use crate::{Error, Result};

/// Relative residual accepted after a direct solve.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Condition estimates above this are rejected.
pub const MAX_CONDITION: f64 = 1e14;
/// Default relative singular-value cutoff for rank decisions.
pub const DEFAULT_SVD_CUTOFF: f64 = 1e-10;

const REFINEMENT_STEPS: usize = 3;
const BLOCK: usize = 64;

enum Factor {
    /// Cholesky of `-A_II` (the interior block is negative definite for Laplacian-like operators).
    NegLlt(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

/// Operator, window and boundary data for a Dirichlet problem.
pub struct HarmonicExtensionProblem<'a> {
    pub operator: &'a SparseOperatorMatrix,
    pub window: &'a VertexWindow,
    /// Values on the boundary vertices, in window order.
    pub boundary_values: Vec<f64>,
}

/// Factorization of the interior block of an operator with identity boundary rows.
pub struct HarmonicSolver {
    n: usize,
    h: f64,
    radius: f64,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    a_ii: SparseOperatorMatrix,
    a_ib: SparseOperatorMatrix,
    factor: Factor,
    symmetric: bool,
    pub condition_estimate: f64,
}

impl HarmonicSolver {
    pub fn new(operator: &SparseOperatorMatrix, window: &VertexWindow) -> Result<Self> {
        let n = window.len();
        if operator.nrows() != n || operator.ncols() != n {
            return Err(Error::input("operator shape does not match the window"));
        }
        let interior = window.interior_vertices();
        let boundary = window.boundary_vertices();
        for &b in &boundary {
            let (c, v) = operator.row(b);
            if c != [b] || v != [1.0] {
                return Err(Error::input(format!("boundary row {b} is not an identity row")));
            }
        }
        let a_ii = operator.submatrix(&interior, &interior);
        let a_ib = operator.submatrix(&interior, &boundary);
        let symmetric = operator.symmetric;
        let fail = |what: &str| {
            Error::solver(format!(
                "{what} failed (h = {}, window radius {}, {} vertices)",
                window.h,
                window.radius,
                window.len()
            ))
        };
        let factor = if interior.is_empty() {
            None
        } else if symmetric {
            match a_ii.scaled(-1.0).to_faer().sp_cholesky(Side::Lower) {
                Ok(l) => Some(Factor::NegLlt(l)),
                Err(_) => Some(Factor::Lu(a_ii.to_faer().sp_lu().map_err(|_| fail("sparse LU"))?)),
            }
        } else {
            Some(Factor::Lu(a_ii.to_faer().sp_lu().map_err(|_| fail("sparse LU"))?))
        };
        let factor = match factor {
            Some(f) => f,
            None => {
                // Nothing to solve; keep a trivial factor.
                let one = SparseOperatorMatrix::identity(1).to_faer();
                Factor::NegLlt(one.sp_cholesky(Side::Lower).map_err(|_| fail("trivial factorization"))?)
            }
        };
        let mut s = Self {
            n,
            h: window.h,
            radius: window.radius,
            interior,
            boundary,
            a_ii,
            a_ib,
            factor,
            symmetric,
            condition_estimate: 1.0,
        };
        if !s.interior.is_empty() {
            s.condition_estimate = s.estimate_condition();
            if !(s.condition_estimate <= MAX_CONDITION) {
                return Err(Error::solver(format!(
                    "interior system is near-singular: condition estimate {:.3e} (h = {}, window radius {}, {} vertices)",
                    s.condition_estimate, s.h, s.radius, s.n
                )));
            }
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn num_boundary(&self) -> usize {
        self.boundary.len()
    }

    /// Solves `A_II X = B` in place.
    fn solve_in_place(&self, mut b: MatMut<'_, f64>) {
        match &self.factor {
            Factor::NegLlt(l) => {
                l.solve_in_place(b.rb_mut());
                b.rb_mut().col_iter_mut().for_each(|c| c.iter_mut().for_each(|x| *x = -*x));
            }
            Factor::Lu(lu) => lu.solve_in_place(b),
        }
    }

    /// Solves `A_II^T X = B` in place.
    fn solve_transpose_in_place(&self, mut b: MatMut<'_, f64>) {
        match &self.factor {
            Factor::NegLlt(l) => {
                l.solve_in_place(b.rb_mut());
                b.rb_mut().col_iter_mut().for_each(|c| c.iter_mut().for_each(|x| *x = -*x));
            }
            Factor::Lu(lu) => lu.solve_transpose_in_place(b),
        }
    }

    fn estimate_condition(&self) -> f64 {
        // Hager's estimator for ||A^-1||_1, times ||A||_1.
        let m = self.interior.len();
        let mut col_sums = vec![0.0; m];
        for (_, j, v) in self.a_ii.triplets() {
            col_sums[j] += v.abs();
        }
        let a_norm = col_sums.iter().fold(0.0f64, |a, &b| a.max(b));
        let mut x = Mat::<f64>::from_fn(m, 1, |_, _| 1.0 / m as f64);
        let mut est = 0.0;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(y.as_mut());
            est = (0..m).map(|i| y[(i, 0)].abs()).sum::<f64>();
            let mut z = Mat::<f64>::from_fn(m, 1, |i, _| if y[(i, 0)] >= 0.0 { 1.0 } else { -1.0 });
            self.solve_transpose_in_place(z.as_mut());
            let (jmax, zmax) = (0..m).map(|i| (i, z[(i, 0)].abs())).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            let ztx: f64 = (0..m).map(|i| z[(i, 0)] * x[(i, 0)]).sum();
            if zmax <= ztx {
                break;
            }
            x = Mat::zeros(m, 1);
            x[(jmax, 0)] = 1.0;
        }
        if !est.is_finite() {
            return f64::INFINITY;
        }
        a_norm * est
    }

    fn interior_residual(&self, ui: &[f64], rhs: &[f64]) -> (Vec<f64>, f64) {
        let au = self.a_ii.apply(ui);
        let r: Vec<f64> = rhs.iter().zip(&au).map(|(b, a)| b - a).collect();
        let scale = self.a_ii.max_abs() * max_abs(ui).max(f64::MIN_POSITIVE) + max_abs(rhs);
        let rel = if scale > 0.0 { max_abs(&r) / scale } else { 0.0 };
        (r, rel)
    }

    /// Harmonic extension of data given on the boundary vertices (in boundary order).
    pub fn extend(&self, boundary_values: &[f64]) -> Result<Vec<f64>> {
        if boundary_values.len() != self.boundary.len() {
            return Err(Error::input(format!(
                "{} boundary values given for {} boundary vertices",
                boundary_values.len(),
                self.boundary.len()
            )));
        }
        if boundary_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("boundary data must be finite"));
        }
        let mut u = vec![0.0; self.n];
        for (&b, &g) in self.boundary.iter().zip(boundary_values) {
            u[b] = g;
        }
        if self.interior.is_empty() {
            return Ok(u);
        }
        let rhs: Vec<f64> = self.a_ib.apply(boundary_values).iter().map(|x| -x).collect();
        let m = self.interior.len();
        let mut x = Mat::<f64>::from_fn(m, 1, |i, _| rhs[i]);
        self.solve_in_place(x.as_mut());
        let mut ui: Vec<f64> = (0..m).map(|i| x[(i, 0)]).collect();
        let (mut r, mut rel) = self.interior_residual(&ui, &rhs);
        let mut steps = 0;
        while rel > RESIDUAL_TOL && steps < REFINEMENT_STEPS {
            let mut dx = Mat::<f64>::from_fn(m, 1, |i, _| r[i]);
            self.solve_in_place(dx.as_mut());
            ui.iter_mut().enumerate().for_each(|(i, v)| *v += dx[(i, 0)]);
            (r, rel) = self.interior_residual(&ui, &rhs);
            steps += 1;
        }
        if rel > RESIDUAL_TOL || ui.iter().any(|v| !v.is_finite()) {
            return Err(Error::solver(format!(
                "relative residual {rel:.3e} after refinement (h = {}, window radius {}, {} vertices)",
                self.h, self.radius, self.n
            )));
        }
        for (&v, &val) in self.interior.iter().zip(&ui) {
            u[v] = val;
        }
        Ok(u)
    }

    /// Harmonic extensions of the columns of `g` (boundary count x m), as full window vectors (n x m).
    pub fn extend_block(&self, g: &Mat<f64>) -> Mat<f64> {
        assert_eq!(g.nrows(), self.boundary.len());
        let m = g.ncols();
        let mut out = Mat::<f64>::zeros(self.n, m);
        for (bi, &b) in self.boundary.iter().enumerate() {
            for j in 0..m {
                out[(b, j)] = g[(bi, j)];
            }
        }
        if self.interior.is_empty() || m == 0 {
            return out;
        }
        let ni = self.interior.len();
        let mut rhs = Mat::<f64>::zeros(ni, m);
        for (i, bcol, val) in self.a_ib.triplets() {
            for j in 0..m {
                rhs[(i, j)] -= val * g[(bcol, j)];
            }
        }
        self.solve_in_place(rhs.as_mut());
        for (ii, &v) in self.interior.iter().enumerate() {
            for j in 0..m {
                out[(v, j)] = rhs[(ii, j)];
            }
        }
        out
    }

    /// Adjoint of the extension map: for `w` (n x m) returns `S^T w` (boundary count x m),
    /// where `S g` is the harmonic extension of `g`.
    pub fn extend_adjoint_block(&self, w: &Mat<f64>) -> Mat<f64> {
        assert_eq!(w.nrows(), self.n);
        let m = w.ncols();
        let nb = self.boundary.len();
        let mut out = Mat::<f64>::zeros(nb, m);
        for (bi, &b) in self.boundary.iter().enumerate() {
            for j in 0..m {
                out[(bi, j)] = w[(b, j)];
            }
        }
        if self.interior.is_empty() || m == 0 {
            return out;
        }
        let ni = self.interior.len();
        let mut y = Mat::<f64>::from_fn(ni, m, |i, j| w[(self.interior[i], j)]);
        self.solve_transpose_in_place(y.as_mut());
        for (i, bcol, val) in self.a_ib.triplets() {
            for j in 0..m {
                out[(bcol, j)] -= val * y[(i, j)];
            }
        }
        out
    }

    /// Seeded random boundary data in `[-1, 1]`, extended and scaled to unit norm on `B_2`.
    pub fn random_harmonic(&self, window: &VertexWindow, seed: u64) -> Result<GridFunction> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = (0..self.boundary.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let u = self.extend(&g)?;
        let n2 = masked_norm(&u, &window.ball_mask(2.0));
        if !(n2 > 0.0) {
            return Err(Error::solver("random solution vanishes on B_2; cannot normalize"));
        }
        GridFunction::new(window, u.iter().map(|x| x / n2).collect())
    }

    /// `random_harmonic` for every seed, solved in blocks.
    pub fn random_harmonics(&self, window: &VertexWindow, seeds: &[u64]) -> Result<Vec<GridFunction>> {
        let mask = window.ball_mask(2.0);
        let mut out = Vec::with_capacity(seeds.len());
        for chunk in seeds.chunks(64) {
            let mut g = Mat::<f64>::zeros(self.boundary.len(), chunk.len());
            for (j, &seed) in chunk.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for i in 0..self.boundary.len() {
                    g[(i, j)] = rng.random_range(-1.0..=1.0);
                }
            }
            let u = self.extend_block(&g);
            for j in 0..chunk.len() {
                let col: Vec<f64> = (0..self.n).map(|i| u[(i, j)]).collect();
                let n2 = masked_norm(&col, &mask);
                if !(n2 > 0.0) {
                    return Err(Error::solver("random solution vanishes on B_2; cannot normalize"));
                }
                out.push(GridFunction::new(window, col.iter().map(|x| x / n2).collect())?);
            }
        }
        Ok(out)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// Solves the Dirichlet problem: `H u = 0` on interior vertices, `u = g` on the boundary.
pub fn harmonic_extension(problem: &HarmonicExtensionProblem<'_>) -> Result<GridFunction> {
    let solver = HarmonicSolver::new(problem.operator, problem.window)?;
    let u = solver.extend(&problem.boundary_values)?;
    GridFunction::new(problem.window, u)
}

/// Seeded random solution normalized to `||u||_{l2(B_2)} = 1`.
pub fn random_harmonic(operator: &SparseOperatorMatrix, window: &VertexWindow, seed: u64) -> Result<GridFunction> {
    HarmonicSolver::new(operator, window)?.random_harmonic(window, seed)
}

/// Orthonormal boundary data whose harmonic extensions vanish on `B_r`.
#[derive(Clone, Debug)]
pub struct ConstrainedSolutionBasis {
    /// Orthonormal columns in the boundary-data space (boundary count x dimension).
    pub boundary_data: Mat<f64>,
    pub r: f64,
    /// Number of constrained vertices (those in `B_r`).
    pub constraint_rows: usize,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub cutoff: f64,
    /// Largest `|u(x)|` over `x` in `B_r`, relative to `max |u|`, before zeroing.
    pub constraint_residual: f64,
    /// Largest interior `|H u|` relative to `max |u|` over the extended columns after zeroing.
    pub residual_bound: f64,
}

impl ConstrainedSolutionBasis {
    pub fn dim(&self) -> usize {
        self.boundary_data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    /// Harmonic extensions of the basis columns with entries on `B_r` set to zero.
    pub fn solutions(&self, solver: &HarmonicSolver, window: &VertexWindow) -> Mat<f64> {
        let mut u = solver.extend_block(&self.boundary_data);
        let mask = window.ball_mask(self.r);
        for (v, &m) in mask.iter().enumerate() {
            if m {
                for j in 0..u.ncols() {
                    u[(v, j)] = 0.0;
                }
            }
        }
        u
    }
}

/// Constraint map `g -> (S g)|_{B_r}` as a dense matrix (constraint rows x boundary count).
fn constraint_map(solver: &HarmonicSolver, rows: &[usize]) -> Mat<f64> {
    let nb = solver.num_boundary();
    let mut c = Mat::<f64>::zeros(rows.len(), nb);
    if rows.is_empty() {
        return c;
    }
    let mut start = 0;
    while start < nb {
        let width = BLOCK.min(nb - start);
        let g = Mat::<f64>::from_fn(nb, width, |i, j| if i == start + j { 1.0 } else { 0.0 });
        let u = solver.extend_block(&g);
        for (ri, &v) in rows.iter().enumerate() {
            for j in 0..width {
                c[(ri, start + j)] = u[(v, j)];
            }
        }
        start += width;
    }
    c
}

/// Basis of boundary data whose extensions vanish on every vertex of `B_r`.
pub fn vanishing_null_basis(
    solver: &HarmonicSolver,
    window: &VertexWindow,
    r: f64,
    cutoff: f64,
) -> Result<ConstrainedSolutionBasis> {
    if !(r < window.radius) {
        return Err(Error::input(format!("inner radius {r} must be below the window radius {}", window.radius)));
    }
    let nb = solver.num_boundary();
    let rows = window.ball(r);
    let c = constraint_map(solver, &rows);
    let (s, v) = linalg::right_svd(&c)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > cutoff * smax).count();
    let dim = nb - rank;
    let basis = Mat::<f64>::from_fn(nb, dim, |i, j| v[(i, rank + j)]);
    let mut out = ConstrainedSolutionBasis {
        boundary_data: basis,
        r,
        constraint_rows: rows.len(),
        rank,
        singular_values: s,
        cutoff,
        constraint_residual: 0.0,
        residual_bound: 0.0,
    };
    if dim > 0 {
        let (cres, hres) = basis_residuals(solver, window, &out)?;
        out.constraint_residual = cres;
        out.residual_bound = hres;
    }
    Ok(out)
}

fn basis_residuals(solver: &HarmonicSolver, window: &VertexWindow, basis: &ConstrainedSolutionBasis) -> Result<(f64, f64)> {
    let mask = window.ball_mask(basis.r);
    let mut cres = 0.0f64;
    let mut hres = 0.0f64;
    let dim = basis.dim();
    let mut start = 0;
    while start < dim {
        let width = BLOCK.min(dim - start);
        let g = Mat::<f64>::from_fn(solver.num_boundary(), width, |i, j| basis.boundary_data[(i, start + j)]);
        let mut u = solver.extend_block(&g);
        for j in 0..width {
            let mut col = linalg::column(&u, j);
            let umax = max_abs(&col).max(f64::MIN_POSITIVE);
            let on_ball = col.iter().zip(&mask).filter(|(_, &m)| m).fold(0.0f64, |a, (x, _)| a.max(x.abs()));
            cres = cres.max(on_ball / umax);
            col.iter_mut().zip(&mask).for_each(|(x, &m)| {
                if m {
                    *x = 0.0
                }
            });
            for (v, x) in col.iter().enumerate() {
                u[(v, j)] = *x;
            }
            let full = solver.a_ii.apply(&solver.interior.iter().map(|&v| col[v]).collect::<Vec<_>>());
            let cross = solver.a_ib.apply(&solver.boundary.iter().map(|&v| col[v]).collect::<Vec<_>>());
            let r = full.iter().zip(&cross).map(|(a, b)| (a + b).abs()).fold(0.0f64, f64::max);
            hres = hres.max(r / umax);
        }
        start += width;
    }
    Ok((cres, hres))
}

/// Writes `index..., class, position..., value` rows for external plotting.
pub fn export_csv<W: std::io::Write>(window: &VertexWindow, u: &GridFunction, out: W) -> Result<()> {
    let d = window.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=d).map(|i| format!("n{i}")).collect();
    header.push("class".into());
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.push("value".into());
    let io = |e: csv::Error| Error::input(format!("CSV write failed: {e}"));
    w.write_record(&header).map_err(io)?;
    for v in 0..window.len() {
        let mut rec: Vec<String> = window.index(v).iter().map(i64::to_string).collect();
        rec.push((window.class(v) + 1).to_string());
        rec.extend(window.position(v).iter().map(|x| format!("{x:.17e}")));
        rec.push(format!("{:.17e}", u.values()[v]));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::input(format!("CSV write failed: {e}")))?;
    Ok(())
}
