use lattice_ucp::graph_core::*;
use lattice_ucp::operators::*;
use lattice_ucp::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn one_point(name: &str) -> OnePointGraph {
    preset(name).unwrap().one_point().unwrap().clone()
}

fn window(g: &OnePointGraph, h: f64, r: f64, collar: usize) -> VertexWindow {
    enumerate_window(g.as_periodic(), h, r, collar).unwrap()
}

fn origin(w: &VertexWindow) -> usize {
    w.find(&vec![0; w.dim()], 0).unwrap()
}

#[test]
fn laplacian_kills_constants_and_linear_functions() {
    for name in ["square2d", "triangular", "fig1c", "cubic3d"] {
        let g = one_point(name);
        let w = window(&g, 0.25, 1.5, 1);
        let one = GridFunction::from_fn(&w, |_| 1.0).unwrap();
        let lin = GridFunction::from_fn(&w, |x| x.iter().enumerate().map(|(i, t)| (i as f64 + 0.7) * t).sum()).unwrap();
        for v in w.interior_vertices() {
            assert_eq!(apply_laplacian(g.as_periodic(), &w, &one, v).unwrap(), 0.0);
            assert!(apply_laplacian(g.as_periodic(), &w, &lin, v).unwrap().abs() < 1e-12, "{name}");
        }
    }
}

#[test]
fn laplacian_of_square_norm_is_four() {
    let g = one_point("square2d");
    let w = window(&g, 1.0, 3.0, 1);
    let u = GridFunction::from_fn(&w, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
    for v in w.interior_vertices() {
        assert!((apply_laplacian(g.as_periodic(), &w, &u, v).unwrap() - 4.0).abs() < 1e-12);
    }
}

#[test]
fn laplacian_reports_missing_neighbor() {
    let g = one_point("square2d");
    let w = window(&g, 1.0, 2.0, 1);
    let u = GridFunction::zeros(&w);
    let b = w.boundary_vertices()[0];
    assert!(matches!(apply_laplacian(g.as_periodic(), &w, &u, b), Err(Error::Stencil { .. })));
}

#[test]
fn differences_on_simple_functions() {
    let g = one_point("triangular");
    let h = 0.125;
    let w = window(&g, h, 1.0, 2);
    let a = [0.3, -1.1];
    let c = GridFunction::from_fn(&w, |_| 2.5).unwrap();
    let lin = GridFunction::from_fn(&w, |x| a[0] * x[0] + a[1] * x[1]).unwrap();
    let v = origin(&w);
    for j in 0..g.k() {
        for var in [DiffVariant::Plus, DiffVariant::Minus, DiffVariant::Symmetric] {
            assert_eq!(apply_diff(&g, &w, &c, v, j, var).unwrap(), 0.0);
        }
        let e = g.generator(j);
        let want = 2.0 * h * (a[0] * e[0] + a[1] * e[1]);
        assert!((apply_diff(&g, &w, &lin, v, j, DiffVariant::Symmetric).unwrap() - want).abs() < 1e-14);
        let p = apply_diff(&g, &w, &lin, v, j, DiffVariant::Plus).unwrap();
        let m = apply_diff(&g, &w, &lin, v, j, DiffVariant::Minus).unwrap();
        let s = apply_diff(&g, &w, &lin, v, j, DiffVariant::Symmetric).unwrap();
        assert_eq!(p + m, s);
    }
    let (ds, ds2) = ds_norms(&g, &w, &lin, v).unwrap();
    let want: f64 = (0..g.k())
        .map(|j| (2.0 * h * (a[0] * g.generator(j)[0] + a[1] * g.generator(j)[1])).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!((ds - want).abs() < 1e-14);
    assert!(ds2.abs() < 1e-14);
    assert_eq!(ds_norms(&g, &w, &c, v).unwrap(), (0.0, 0.0));
}

#[test]
fn indicator_forward_difference() {
    let g = one_point("square2d");
    let w = window(&g, 1.0, 3.0, 1);
    let o = origin(&w);
    let mut vals = vec![0.0; w.len()];
    vals[o] = 1.0;
    let u = GridFunction::new(&w, vals).unwrap();
    assert_eq!(apply_diff(&g, &w, &u, o, 0, DiffVariant::Plus).unwrap(), -1.0);
}

#[test]
fn second_symmetric_difference_of_square() {
    let g = one_point("square2d");
    let w = window(&g, 1.0, 4.0, 2);
    let u = GridFunction::from_fn(&w, |x| x[0] * x[0]).unwrap();
    let (ds, ds2) = ds_norms(&g, &w, &u, origin(&w)).unwrap();
    assert_eq!(ds, 0.0);
    assert_eq!(ds2, 8.0);
}

#[test]
fn free_operator_is_scaled_laplacian() {
    let g = one_point("triangular");
    let h = 0.125;
    let w = window(&g, h, 1.5, 1);
    let data = SchrodingerData::zero(&g, &w, 0);
    let hm = assemble_schrodinger(&g, &data, &w, MagneticVariant::Symmetric).unwrap();
    assert!(hm.symmetric);
    let lap = laplacian_matrix(&w);
    for v in w.interior_vertices() {
        let (cols, vals) = hm.row(v);
        for (c, x) in cols.iter().zip(vals) {
            assert!((x - lap.get(v, *c) / (h * h)).abs() < 1e-9);
        }
    }
    for v in w.boundary_vertices() {
        assert_eq!(hm.row(v), (&[v][..], &[1.0][..]));
    }
}

#[test]
fn constant_potential_adds_identity_on_interior() {
    let g = one_point("square2d");
    let h = 0.25;
    let w = window(&g, h, 1.5, 1);
    let zero = assemble_schrodinger(&g, &SchrodingerData::zero(&g, &w, 0), &w, MagneticVariant::Symmetric).unwrap();
    let data = SchrodingerData::on_site(&g, &w, constant_potential(&w, 1.75).unwrap()).unwrap();
    let hm = assemble_schrodinger(&g, &data, &w, MagneticVariant::Symmetric).unwrap();
    for v in w.interior_vertices() {
        assert!((hm.get(v, v) - zero.get(v, v) - 1.75).abs() < 1e-12);
    }
}

fn random_data(g: &OnePointGraph, w: &VertexWindow, l: usize, seed: u64) -> SchrodingerData {
    let paths = PathClass::new(g, l);
    let pots = (0..paths.len()).map(|i| uniform_potential(w, 1.0, seed + i as u64).unwrap()).collect();
    let mags = (0..g.k()).map(|j| uniform_potential(w, 1.0, seed + 100 + j as u64).unwrap()).collect();
    SchrodingerData::new(paths, pots, mags).unwrap()
}

#[test]
fn assembly_matches_pointwise_oracle() {
    let g = one_point("square2d");
    let h = 0.125;
    for l in [0usize, 2] {
        let w = window(&g, h, 1.0, l.max(1));
        let data = random_data(&g, &w, l, 3);
        for variant in [MagneticVariant::Symmetric, MagneticVariant::Forward] {
            let hm = assemble_schrodinger(&g, &data, &w, variant).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for _ in 0..100 {
                let u: Vec<f64> = (0..w.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let hu = hm.apply(&u);
                let gf = GridFunction::new(&w, u).unwrap();
                for v in w.interior_vertices() {
                    let want = apply_schrodinger(&g, &data, &w, &gf, v, variant).unwrap();
                    assert!((hu[v] - want).abs() <= 1e-12 * (1.0 + want.abs()) * 64.0);
                }
            }
        }
    }
}

#[test]
fn independent_oracle_for_magnetic_term() {
    // h^-2 Delta u + h^-1 sum_j B_j (u(x + h e_j) - u(x - h e_j)) + V_0 u, written from positions only.
    let g = one_point("square2d");
    let h = 0.125;
    let w = window(&g, h, 1.0, 1);
    let data = random_data(&g, &w, 0, 21);
    let hm = assemble_schrodinger(&g, &data, &w, MagneticVariant::Symmetric).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u: Vec<f64> = (0..w.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let hu = hm.apply(&u);
    for v in w.interior_vertices() {
        let n = w.index(v).to_vec();
        let at = |dx: i64, dy: i64| u[w.find(&[n[0] + dx, n[1] + dy], 0).unwrap()];
        let lap = at(1, 0) + at(-1, 0) + at(0, 1) + at(0, -1) - 4.0 * u[v];
        let mag = data.magnetic[0].values()[v] * (at(1, 0) - at(-1, 0)) + data.magnetic[1].values()[v] * (at(0, 1) - at(0, -1));
        let want = lap / (h * h) + mag / h + data.potentials[0].values()[v] * u[v];
        assert!((hu[v] - want).abs() < 1e-10);
    }
}

#[test]
fn misaligned_potential_is_rejected() {
    let g = one_point("square2d");
    let w = window(&g, 0.25, 1.0, 1);
    let other = window(&g, 0.25, 1.5, 1);
    let data = SchrodingerData::on_site(&g, &other, GridFunction::zeros(&other)).unwrap();
    assert!(matches!(assemble_schrodinger(&g, &data, &w, MagneticVariant::Symmetric), Err(Error::Input(_))));
}

#[test]
fn bound_is_recomputed_maximum() {
    let g = one_point("triangular");
    let w = window(&g, 0.25, 1.0, 2);
    let data = random_data(&g, &w, 1, 5);
    let want = data.potentials.iter().chain(&data.magnetic).map(|f| f.sup_norm()).fold(0.0, f64::max);
    assert_eq!(data.bound(), want);
}

#[test]
fn path_class_shapes() {
    let g = one_point("square2d");
    assert_eq!(PathClass::new(&g, 0).offsets, vec![vec![0, 0]]);
    assert_eq!(PathClass::new(&g, 1).len(), 5);
    assert_eq!(PathClass::new(&g, 2).len(), 13);
    let p = PathClass::new(&one_point("triangular"), 2);
    for o in &p.offsets {
        let n: Vec<i64> = o.iter().map(|x| -x).collect();
        assert!(p.offsets.contains(&n));
    }
}

#[test]
fn laplacian_quadratic_form_is_edge_sum() {
    let g = one_point("triangular");
    let w = window(&g, 0.25, 2.0, 1);
    let lap = laplacian_matrix(&w);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u: Vec<f64> = (0..w.len())
        .map(|v| if w.norm(v) <= 1.0 { rng.random_range(-1.0..1.0) } else { 0.0 })
        .collect();
    let lu = lap.apply(&u);
    let form: f64 = -u.iter().zip(&lu).map(|(a, b)| a * b).sum::<f64>();
    let mut edges = 0.0;
    for v in w.interior_vertices() {
        for (_, n) in w.neighbors(v) {
            let y = n.unwrap();
            edges += 0.5 * (u[y] - u[v]).powi(2);
        }
    }
    assert!(form >= -1e-12);
    assert!((form - edges).abs() < 1e-10 * edges.max(1.0));
    assert!(lap.symmetry_defect(&w.interior_vertices(), 1.0) < 1e-12);
}

#[test]
fn forward_backward_products_equal_second_difference() {
    let g = one_point("fig1c");
    let w = window(&g, 0.125, 1.0, 2);
    let int: Vec<usize> = w.interior_vertices();
    for j in 0..g.k() {
        let p = diff_matrix(&g, &w, j, DiffVariant::Plus).unwrap();
        let m = diff_matrix(&g, &w, j, DiffVariant::Minus).unwrap();
        let pm = p.matmul(&m).unwrap();
        let mp = m.matmul(&p).unwrap();
        for &v in &int {
            let x = w.neighbor_slot(v, 2 * j).unwrap();
            let y = w.neighbor_slot(v, 2 * j + 1).unwrap();
            if !(w.is_interior(x) && w.is_interior(y)) {
                continue;
            }
            for (a, b) in [(v, v), (v, x), (v, y)] {
                let want = if a == b { -2.0 } else { 1.0 };
                assert_eq!(pm.get(a, b), want);
                assert_eq!(mp.get(a, b), want);
            }
        }
    }
}

#[test]
fn multiplier_examples() {
    let g = one_point("square2d");
    let z = multiplier_check(&g, 0.25, 0, &[0.0, 0.0]).unwrap();
    assert_eq!(z.laplacian_predicted.re, 0.0);
    assert!(z.max_error < 1e-10);
    let half = multiplier_check(&g, 0.25, 0, &[2.0, 0.0]).unwrap();
    assert!((half.laplacian_predicted.re + 4.0).abs() < 1e-12);
    assert!(half.diff_predicted.norm() < 1e-12);
    assert!(half.max_error < 1e-10);
    let q = multiplier_check(&g, 0.25, 0, &[1.0, 0.0]).unwrap();
    assert!((q.laplacian_predicted.re + 2.0).abs() < 1e-12);
    assert!(q.max_error < 1e-10);
    assert!(matches!(multiplier_check(&g, 0.25, 0, &[std::f64::consts::PI, 0.0]), Err(Error::Input(_))));
}

#[test]
fn parseval_on_torus() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (side, d) in [(16usize, 1usize), (12, 2), (6, 3)] {
        let vals: Vec<f64> = (0..side.pow(d as u32)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, b) = parseval_check(&vals, side, d).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }
}

#[test]
fn potential_csv_and_generators() {
    let g = one_point("square2d");
    let w = window(&g, 0.5, 1.0, 1);
    let csv = "n1,n2,class,value\n0,0,1,2.5\n1,0,1,-1\n40,40,1,9\n";
    let v = potential_from_csv(&w, csv.as_bytes()).unwrap();
    assert_eq!(v.values()[origin(&w)], 2.5);
    assert_eq!(v.values()[w.find(&[1, 0], 0).unwrap()], -1.0);
    assert_eq!(v.values().iter().filter(|x| **x != 0.0).count(), 2);
    assert!(potential_from_csv(&w, "0,0,0,1\n".as_bytes()).is_err());
    let u = uniform_potential(&w, 0.5, 1).unwrap();
    assert!(u.sup_norm() <= 0.5);
    assert_eq!(u, uniform_potential(&w, 0.5, 1).unwrap());
    let r = radial_potential(&w, 2.0).unwrap();
    assert_eq!(r.values()[origin(&w)], 2.0);
}

proptest! {
    #[test]
    fn symmetric_difference_splits(seed in 0u64..1000, j in 0usize..3) {
        let g = one_point("triangular");
        let w = window(&g, 0.25, 1.0, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = GridFunction::new(&w, (0..w.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        for v in w.interior_vertices() {
            let p = apply_diff(&g, &w, &u, v, j, DiffVariant::Plus).unwrap();
            let m = apply_diff(&g, &w, &u, v, j, DiffVariant::Minus).unwrap();
            let s = apply_diff(&g, &w, &u, v, j, DiffVariant::Symmetric).unwrap();
            prop_assert!((p + m - s).abs() < 1e-15);
        }
    }
}

#[test]
fn hexagonal_laplacian_of_quadratics() {
    // Unit bonds d with sum d d^T = (3/2) I give h^-2 Delta g = (1/2) sum_d d^T Hess d = (3/4) Delta g.
    let g = preset("hexagonal").unwrap().periodic().clone();
    let h = 1.0 / 16.0;
    let w = enumerate_window(&g, h, 1.0, 1).unwrap();
    let (a, b, c) = (0.7, -0.4, 1.3);
    let q = GridFunction::from_fn(&w, |x| a * x[0] * x[0] + b * x[0] * x[1] + c * x[1] * x[1] + x[0] - 2.0).unwrap();
    let lap_q = 2.0 * (a + c);
    for v in w.interior_vertices() {
        let got = apply_laplacian(&g, &w, &q, v).unwrap() / (h * h);
        assert!((got - 0.75 * lap_q).abs() < 1e-9, "{got}");
    }
}
