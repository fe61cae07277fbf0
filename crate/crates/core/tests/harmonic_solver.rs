use faer::Mat;
use lattice_ucp::graph_core::*;
use lattice_ucp::harmonic_solver::*;
use lattice_ucp::linalg::{orthonormality_defect, right_svd};
use lattice_ucp::operators::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(name: &str, h: f64, r: f64) -> (OnePointGraph, VertexWindow, SparseOperatorMatrix) {
    let g = preset(name).unwrap().one_point().unwrap().clone();
    let w = enumerate_window(g.as_periodic(), h, r, 1).unwrap();
    let op = assemble_schrodinger(&g, &SchrodingerData::zero(&g, &w, 0), &w, MagneticVariant::Symmetric).unwrap();
    (g, w, op)
}

fn boundary_from(w: &VertexWindow, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    w.boundary_vertices().into_iter().map(|v| f(w.position(v))).collect()
}

#[test]
fn linear_data_extends_to_the_linear_function() {
    for name in ["square2d", "triangular"] {
        let (_, w, op) = setup(name, 0.125, 2.0);
        let f = |x: &[f64]| 0.4 * x[0] - 1.3 * x[1] + 0.2;
        let p = HarmonicExtensionProblem { operator: &op, window: &w, boundary_values: boundary_from(&w, f) };
        let u = harmonic_extension(&p).unwrap();
        for v in 0..w.len() {
            assert!((u.values()[v] - f(w.position(v))).abs() < 1e-10, "{name}");
        }
    }
}

#[test]
fn constant_data_extends_to_constant() {
    let (_, w, op) = setup("fig1c", 0.125, 2.0);
    let p = HarmonicExtensionProblem { operator: &op, window: &w, boundary_values: vec![1.0; w.boundary_vertices().len()] };
    let u = harmonic_extension(&p).unwrap();
    assert!(u.values().iter().all(|x| (x - 1.0).abs() < 1e-12));
}

#[test]
fn random_harmonic_is_deterministic_and_normalised() {
    let (g, w, op) = setup("square2d", 0.125, 4.0);
    let a = random_harmonic(&op, &w, 7).unwrap();
    let b = random_harmonic(&op, &w, 7).unwrap();
    let c = random_harmonic(&op, &w, 8).unwrap();
    assert_eq!(a.values(), b.values());
    assert_ne!(a.values(), c.values());
    let n2: f64 = (0..w.len()).filter(|&v| w.norm(v) <= 2.0).map(|v| a.values()[v].powi(2)).sum();
    assert!((n2 - 1.0).abs() < 1e-12);
    // Residual through the pointwise stencil, independent of the assembled matrix.
    let data = SchrodingerData::zero(&g, &w, 0);
    let sup = a.sup_norm();
    for v in w.interior_vertices() {
        let r = apply_schrodinger(&g, &data, &w, &a, v, MagneticVariant::Symmetric).unwrap();
        assert!(r.abs() <= 1e-10 * sup * op.max_abs());
    }
}

#[test]
fn batched_random_harmonics_match_single_solves() {
    let (_, w, op) = setup("triangular", 0.125, 4.0);
    let solver = HarmonicSolver::new(&op, &w).unwrap();
    let batch = solver.random_harmonics(&w, &[3, 4, 5]).unwrap();
    for (u, s) in batch.iter().zip([3u64, 4, 5]) {
        let single = solver.random_harmonic(&w, s).unwrap();
        for (a, b) in u.values().iter().zip(single.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn maximum_principle_and_linearity() {
    let (_, w, op) = setup("triangular", 0.125, 2.0);
    let solver = HarmonicSolver::new(&op, &w).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let nb = solver.num_boundary();
    let g1: Vec<f64> = (0..nb).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g2: Vec<f64> = (0..nb).map(|_| rng.random_range(-1.0..1.0)).collect();
    let u1 = solver.extend(&g1).unwrap();
    let u2 = solver.extend(&g2).unwrap();
    let (lo, hi) = g1.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    for &v in solver.interior() {
        assert!(u1[v] >= lo - 1e-12 && u1[v] <= hi + 1e-12);
    }
    let (a, b) = (1.7, -0.3);
    let g3: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| a * x + b * y).collect();
    let u3 = solver.extend(&g3).unwrap();
    for v in 0..w.len() {
        assert!((u3[v] - a * u1[v] - b * u2[v]).abs() < 1e-10);
    }
}

#[test]
fn adjoint_block_is_the_transpose_of_extension() {
    let (_, w, op) = setup("fig1c", 0.25, 2.0);
    let solver = HarmonicSolver::new(&op, &w).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = Mat::<f64>::from_fn(solver.num_boundary(), 3, |_, _| rng.random_range(-1.0..1.0));
    let y = Mat::<f64>::from_fn(w.len(), 2, |_, _| rng.random_range(-1.0..1.0));
    let sg = solver.extend_block(&g);
    let sty = solver.extend_adjoint_block(&y);
    let lhs = y.transpose() * &sg;
    let rhs = sty.transpose() * &g;
    for i in 0..2 {
        for j in 0..3 {
            assert!((lhs[(i, j)] - rhs[(i, j)]).abs() < 1e-10 * (1.0 + lhs[(i, j)].abs()));
        }
    }
}

#[test]
fn null_basis_with_empty_constraint_spans_everything() {
    let (_, w, op) = setup("square2d", 0.25, 2.0);
    let solver = HarmonicSolver::new(&op, &w).unwrap();
    let b = vanishing_null_basis(&solver, &w, -1.0, 1e-10).unwrap();
    assert_eq!(b.constraint_rows, 0);
    assert_eq!(b.dim(), solver.num_boundary());
}

#[test]
fn null_basis_with_full_constraint_is_empty() {
    let (_, w, op) = setup("square2d", 0.25, 2.1);
    let solver = HarmonicSolver::new(&op, &w).unwrap();
    let r = w.norms().iter().cloned().fold(0.0, f64::max);
    assert!(r < w.radius);
    let b = vanishing_null_basis(&solver, &w, r, 1e-10).unwrap();
    assert!(b.is_empty());
}

#[test]
fn null_basis_dimension_matches_dense_rank() {
    let (_, w, op) = setup("square2d", 0.125, 4.0);
    let solver = HarmonicSolver::new(&op, &w).unwrap();
    let b = vanishing_null_basis(&solver, &w, 0.5, 1e-10).unwrap();
    // Dense oracle: constraint map as an explicit matrix, rank by singular values.
    let nb = solver.num_boundary();
    let rows: Vec<usize> = (0..w.len()).filter(|&v| w.norm(v) <= 0.5).collect();
    let eye = Mat::<f64>::from_fn(nb, nb, |i, j| if i == j { 1.0 } else { 0.0 });
    let full = solver.extend_block(&eye);
    let c = Mat::<f64>::from_fn(rows.len(), nb, |i, j| full[(rows[i], j)]);
    let (sv, _) = right_svd(&c).unwrap();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > 1e-10 * top).count();
    assert_eq!(b.dim(), nb - rank);
    assert!(orthonormality_defect(&b.boundary_data) < 1e-12);
    let sols = b.solutions(&solver, &w);
    for j in 0..b.dim() {
        for &v in &rows {
            assert_eq!(sols[(v, j)], 0.0);
        }
    }
    assert!(b.residual_bound <= 1e-8);
}

#[test]
fn csv_export_has_one_row_per_vertex() {
    let (_, w, op) = setup("square2d", 0.5, 1.0);
    let u = random_harmonic(&op, &w, 1).unwrap();
    let mut out = Vec::new();
    export_csv(&w, &u, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), w.len() + 1);
}
