use lattice_ucp::carleman::*;
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

fn phi_ref(c: f64, t: f64) -> f64 {
    let l = t.ln();
    -l + c * (l * l.atan() - 0.5 * (1.0 + l * l).ln())
}

/// Random values on `lo <= |x| <= hi`, zero elsewhere.
fn shell_function(w: &VertexWindow, lo: f64, hi: f64, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = (0..w.len())
        .map(|v| {
            let r = w.norm(v);
            let x: f64 = rng.random_range(-1.0..1.0);
            if r >= lo && r <= hi { x } else { 0.0 }
        })
        .collect();
    GridFunction::new(w, vals).unwrap()
}

#[test]
fn weight_examples() {
    let w = CarlemanWeight::new(0.1, 1.0).unwrap();
    assert_eq!(weight_eval(&w, 1.0, 0).unwrap(), 0.0);
    assert_eq!(weight_eval(&w, 1.0, 1).unwrap(), -1.0);
    assert!((weight_eval(&w, 1.0, 2).unwrap() - 1.1).abs() < 1e-15);
    let e = std::f64::consts::E;
    let expected = -1.0 + 0.1 * (std::f64::consts::FRAC_PI_4 - 0.5 * 2f64.ln());
    assert!((weight_eval(&w, e, 0).unwrap() - expected).abs() < 1e-14);
    assert!((weight_eval(&w, e, 0).unwrap() + 0.956118).abs() < 1e-6);
    assert!(matches!(weight_eval(&w, 0.0, 0), Err(Error::Domain(_))));
    assert!(matches!(weight_eval(&w, -1.0, 1), Err(Error::Domain(_))));
    assert!(weight_eval(&w, 1.0, 3).is_err());
}

#[test]
fn weight_parameter_is_validated() {
    assert!(CarlemanWeight::new(0.0, 1.0).is_err());
    assert!(CarlemanWeight::new(0.7, 1.0).is_err());
    assert!(CarlemanWeight::new(0.1, 0.0).is_err());
    assert!(CarlemanWeight::new(0.1, f64::INFINITY).is_err());
}

#[test]
fn weight_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let c = rng.random_range(0.01..0.6);
        let t: f64 = rng.random_range(0.05..8.0);
        let w = CarlemanWeight::new(c, 1.0).unwrap();
        let eps = 1e-5 * t;
        let d1 = (w.phi(t + eps).unwrap() - w.phi(t - eps).unwrap()) / (2.0 * eps);
        let d2 = (w.dphi(t + eps).unwrap() - w.dphi(t - eps).unwrap()) / (2.0 * eps);
        assert!((d1 - w.dphi(t).unwrap()).abs() < 1e-6 * (1.0 + d1.abs()), "phi' at c={c} t={t}");
        assert!((d2 - w.d2phi(t).unwrap()).abs() < 1e-6 * (1.0 + d2.abs()), "phi'' at c={c} t={t}");
        assert!((w.phi(t).unwrap() - phi_ref(c, t)).abs() < 1e-13);
    }
}

#[test]
fn weight_is_decreasing_and_exponents_positive() {
    for c in [0.01, 0.1, 0.3, 0.6] {
        let w = CarlemanWeight::new(c, 1.0).unwrap();
        let ts: Vec<f64> = (0..=400).map(|i| 0.25 + 3.75 * i as f64 / 400.0).collect();
        for pair in ts.windows(2) {
            assert!(w.phi(pair[1]).unwrap() < w.phi(pair[0]).unwrap());
        }
        let (c1, c2) = w.three_ball_exponents();
        assert!(c1 > 0.0 && c2 > 0.0);
        let alpha = w.interpolation_exponent();
        assert!(alpha > 0.0 && alpha < 1.0);
    }
}

#[test]
fn gradient_example_and_derivatives_by_differences() {
    let g = one_point("square2d");
    let w = CarlemanWeight::new(0.1, 1.0).unwrap();
    let d = phi_tau_grad_hess(&w, &g, &[1.0, 0.0]).unwrap();
    assert!((d.gradient[0] + 1.0).abs() < 1e-14 && d.gradient[1].abs() < 1e-14);
    assert!(phi_tau_grad_hess(&w, &g, &[0.0, 0.0]).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for name in ["square2d", "triangular", "fig1c"] {
        let g = one_point(name);
        let w = CarlemanWeight::new(0.2, 3.0).unwrap();
        for _ in 0..100 {
            let r = rng.random_range(0.5..4.0);
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            let x = [r * th.cos(), r * th.sin()];
            let d = phi_tau_grad_hess(&w, &g, &x).unwrap();
            let value = |y: &[f64]| w.tau * w.phi(g.gamma_norm(y).unwrap()).unwrap();
            let grad = |y: &[f64]| phi_tau_grad_hess(&w, &g, y).unwrap().gradient;
            assert!((d.value - value(&x)).abs() < 1e-13);
            let eps = 1e-6;
            for i in 0..2 {
                let mut p = x;
                let mut m = x;
                p[i] += eps;
                m[i] -= eps;
                let fd = (value(&p) - value(&m)) / (2.0 * eps);
                assert!((fd - d.gradient[i]).abs() < 1e-6, "{name} gradient");
                let hd = (grad(&p) - grad(&m)) / (2.0 * eps);
                for j in 0..2 {
                    assert!((hd[j] - d.hessian[(j, i)]).abs() < 1e-5, "{name} hessian");
                }
            }
            let e = g.e_matrix();
            assert!((&d.grad_e - e * &d.gradient).norm() < 1e-12);
            assert!((&d.hess_e - e * &d.hessian * e.transpose()).norm() < 1e-12);
        }
    }
}

#[test]
fn pseudoconvexity_on_unit_sphere_equals_c() {
    let g = one_point("square2d");
    for c in [0.05, 0.1, 0.4] {
        let w = CarlemanWeight::new(c, 1.0).unwrap();
        for th in [0.0f64, 0.7, 2.0, 4.5] {
            let x = [th.cos(), th.sin()];
            let xi = characteristic_point(&w, &g, &x, &[-th.sin() + 0.3, th.cos()]).unwrap();
            let d = phi_tau_grad_hess(&w, &g, &x).unwrap();
            assert!(xi.dot(&d.gradient).abs() < 1e-13);
            assert!((xi.norm() - d.gradient.norm()).abs() < 1e-13);
            let q = pseudoconvexity_quantity(&w, &g, &x, xi.as_slice()).unwrap();
            assert!((q - c).abs() < 1e-12, "c={c}: {q}");
        }
    }
    let floor = pseudoconvexity_floor(0.1);
    assert!(floor > 0.0 && floor < 0.1);
}

#[test]
fn pseudoconvexity_is_cubically_homogeneous() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for name in ["square2d", "triangular", "fig1c"] {
        let g = one_point(name);
        let w1 = CarlemanWeight::new(0.1, 1.0).unwrap();
        for _ in 0..50 {
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let xi = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let tau = rng.random_range(1.5..40.0);
            let wt = w1.with_tau(tau).unwrap();
            let q1 = pseudoconvexity_quantity(&w1, &g, &x, &xi).unwrap();
            let qt = pseudoconvexity_quantity(&wt, &g, &x, &[tau * xi[0], tau * xi[1]]).unwrap();
            assert!((qt - tau.powi(3) * q1).abs() < 1e-9 * tau.powi(3) * (1.0 + q1.abs()), "{name}");
        }
    }
}

#[test]
fn pseudoconvexity_grid_report_is_consistent() {
    let g = one_point("square2d");
    let w = CarlemanWeight::new(0.1, 4.0).unwrap();
    let tiny = pseudoconvexity_grid_min(&w, &g, 6, 8, 50, 1e-4, 0.25, 1).unwrap();
    assert!(tiny.pass, "{tiny:?}");
    assert!((tiny.min_scaled - tiny.min_value / 64.0).abs() < 1e-12);
    let again = pseudoconvexity_grid_min(&w, &g, 6, 8, 50, 1e-4, 0.25, 1).unwrap();
    assert_eq!(tiny, again);
    assert!(pseudoconvexity_grid_min(&w, &g, 0, 8, 50, 0.1, 0.25, 1).is_err());
}

#[test]
fn conjugated_operator_matches_direct_composition() {
    for name in ["square2d", "triangular"] {
        let g = one_point(name);
        let h = 1.0 / 16.0;
        let win = window(&g, h, 2.5, 1);
        let w = CarlemanWeight::new(0.1, 6.0).unwrap();
        let f = shell_function(&win, 0.5, 2.3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let candidates: Vec<usize> =
            win.interior_vertices().into_iter().filter(|&v| win.norm(v) > 0.5).collect();
        for _ in 0..100 {
            let v = candidates[rng.random_range(0..candidates.len())];
            let a = conjugated_apply(&w, &g, &win, &f, v).unwrap();
            let b = conjugated_apply_naive(&w, &g, &win, &f, v).unwrap();
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{name}: {a} vs {b}");
        }
        let zero = GridFunction::zeros(&win);
        assert_eq!(conjugated_apply(&w, &g, &win, &zero, candidates[0]).unwrap(), 0.0);
        let o = win.find(&[0, 0], 0).unwrap();
        assert!(conjugated_apply(&w, &g, &win, &f, o).is_err());
    }
}

#[test]
fn conjugated_operator_tends_to_laplacian_as_tau_vanishes() {
    let g = one_point("triangular");
    let h = 1.0 / 16.0;
    let win = window(&g, h, 2.5, 1);
    let w = CarlemanWeight::new(0.1, 1e-12).unwrap();
    let f = shell_function(&win, 0.5, 2.3, 8);
    for v in win.interior_vertices().into_iter().filter(|&v| win.norm(v) > 0.5) {
        let a = conjugated_apply(&w, &g, &win, &f, v).unwrap();
        let lap = apply_laplacian(g.as_periodic(), &win, &f, v).unwrap() / (h * h);
        assert!((a - lap).abs() <= 1e-8 * (1.0 + lap.abs()));
    }
}

#[test]
fn split_parts_have_the_right_symmetry() {
    let g = one_point("square2d");
    let h = 1.0 / 16.0;
    let win = window(&g, h, 2.5, 1);
    let w = CarlemanWeight::new(0.1, 8.0).unwrap();
    let ops = split_sa(&w, &g, &win, 0.5).unwrap();
    let s = ops.s.to_dense();
    let a = ops.a.to_dense();
    let n = ops.active.len();
    let scale = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in 0..n {
            assert!((s[(i, j)] - s[(j, i)]).abs() <= 1e-12 * scale);
            assert!((a[(i, j)] + a[(j, i)]).abs() <= 1e-12 * scale);
        }
    }
    let small = split_sa(&w.with_tau(1e-12).unwrap(), &g, &win, 0.5).unwrap();
    assert!(small.a.to_dense().iter().all(|x| x.abs() < 1e-6));
}

#[test]
fn split_reassembles_the_conjugated_operator() {
    let g = one_point("triangular");
    let h = 1.0 / 16.0;
    let win = window(&g, h, 2.5, 1);
    let w = CarlemanWeight::new(0.1, 6.0).unwrap();
    let ops = split_sa(&w, &g, &win, 0.5).unwrap();
    let f = shell_function(&win, 0.75, 1.75, 11);
    let fa = ops.restrict(&win, f.values()).unwrap();
    let lf = ops.l().apply(&fa);
    for (i, &v) in ops.active.iter().enumerate() {
        let direct = conjugated_apply(&w, &g, &win, &f, v).unwrap();
        assert!((lf[i] - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
    }
    let outside = shell_function(&win, 0.0, 0.3, 1);
    assert!(ops.restrict(&win, outside.values()).is_err());
}

#[test]
fn norm_expansion_and_commutator_closed_form() {
    for name in ["square2d", "triangular"] {
        let g = one_point(name);
        let h = 1.0 / 16.0;
        let win = window(&g, h, 2.5, 1);
        let w = CarlemanWeight::new(0.1, 6.0).unwrap();
        let ops = split_sa(&w, &g, &win, 0.5).unwrap();
        for seed in 0..3 {
            let f = shell_function(&win, 0.75, 1.75, seed);
            let fa = ops.restrict(&win, f.values()).unwrap();
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            let lf = ops.l().apply(&fa);
            let sf = ops.s.apply(&fa);
            let af = ops.a.apply(&fa);
            let comm = commutator_form_matrix(&ops, &fa);
            let lhs = dot(&lf, &lf);
            let rhs = dot(&sf, &sf) + dot(&af, &af) + comm;
            assert!((lhs - rhs).abs() <= 1e-10 * lhs, "{name}");
            let closed = commutator_form_closed(&w, &g, &win, &f).unwrap();
            assert!((closed - comm).abs() <= 1e-9 * (1.0 + comm.abs()), "{name}: {closed} vs {comm}");
        }
    }
}

#[test]
fn carleman_ratio_of_zero_is_trivial() {
    let g = one_point("square2d");
    let h = 1.0 / 16.0;
    let win = window(&g, h, 4.5, 2);
    let cfg = ConstantsConfig::default();
    let w = CarlemanWeight::new(0.1, cfg.default_tau(h)).unwrap();
    let r = carleman_ratio(&w, &g, &win, &GridFunction::zeros(&win), &cfg).unwrap();
    assert!(r.ratio.is_nan() && r.lhs == 0.0 && r.rhs == 0.0);
    assert!(r.is_finite_or_trivial());
}

#[test]
fn carleman_ratio_of_single_vertex_indicator() {
    let g = one_point("square2d");
    let h = 1.0 / 16.0;
    let win = window(&g, h, 4.5, 2);
    let cfg = ConstantsConfig::default();
    let (c, tau) = (0.1, 5.0);
    let w = CarlemanWeight::new(c, tau).unwrap();
    let x0 = win.find(&[16, 0], 0).unwrap();
    let mut vals = vec![0.0; win.len()];
    vals[x0] = 1.0;
    let u = GridFunction::new(&win, vals).unwrap();
    let r = carleman_ratio(&w, &g, &win, &u, &cfg).unwrap();

    let e2 = |x: f64, y: f64| (2.0 * tau * phi_ref(c, (x * x + y * y).sqrt())).exp();
    let h4 = h.powi(4);
    let mut lhs = e2(1.0, 0.0) * (tau.powi(3) + 8.0 / (tau * h4));
    let mut rhs = e2(1.0, 0.0) * 16.0 / h4;
    for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
        lhs += e2(1.0 + h * dx, h * dy) * tau / (h * h);
        lhs += e2(1.0 + 2.0 * h * dx, 2.0 * h * dy) / (tau * h4);
        rhs += e2(1.0 + h * dx, h * dy) / h4;
    }
    assert!((r.lhs - lhs).abs() <= 1e-12 * lhs, "{} vs {lhs}", r.lhs);
    assert!((r.rhs - rhs).abs() <= 1e-12 * rhs, "{} vs {rhs}", r.rhs);
    assert!((r.ratio - lhs / rhs).abs() <= 1e-12 * r.ratio);
}

#[test]
fn carleman_ratio_rejects_bad_support_and_tau() {
    let g = one_point("square2d");
    let h = 1.0 / 16.0;
    let win = window(&g, h, 4.5, 2);
    let cfg = ConstantsConfig::default();
    let w = CarlemanWeight::new(0.1, 5.0).unwrap();
    let inner = shell_function(&win, 0.0, 0.25, 2);
    let err = carleman_ratio(&w, &g, &win, &inner, &cfg).unwrap_err();
    assert!(err.to_string().contains("B_2"), "{err}");
    let outer = shell_function(&win, 2.5, 3.0, 2);
    assert!(carleman_ratio(&w, &g, &win, &outer, &cfg).is_err());
    let bump = annulus_bump(&win, 4, 0).unwrap();
    for tau in [1.0, 8.0, 20.0] {
        let wt = w.with_tau(tau).unwrap();
        assert!(carleman_ratio(&wt, &g, &win, &bump, &cfg).is_err(), "tau = {tau}");
    }
    let ok = carleman_ratio(&w, &g, &win, &bump, &cfg).unwrap();
    assert!(ok.ratio.is_finite() && ok.ratio > 0.0);
}

#[test]
fn sup_estimate_dominates_seed_ratios() {
    let g = one_point("square2d");
    let h = 1.0 / 16.0;
    let win = window(&g, h, 4.5, 2);
    let cfg = ConstantsConfig::default();
    let w = CarlemanWeight::new(0.1, cfg.default_tau(h)).unwrap();
    let seeds: Vec<GridFunction> = (0..6).map(|s| annulus_bump(&win, 6, s).unwrap()).collect();
    let forms = conjugated_forms(&w, &g, &win).unwrap();
    let est = carleman_sup_estimate(&forms, &seeds, 4).unwrap();
    let raw = seeds
        .iter()
        .map(|u| carleman_ratio(&w, &g, &win, u, &cfg).unwrap().ratio)
        .fold(0.0f64, f64::max);
    assert!((est.raw_max - raw).abs() <= 1e-9 * raw, "{} vs {raw}", est.raw_max);
    assert!(est.ritz >= raw * (1.0 - 1e-9));
    assert!(est.history.windows(2).all(|p| p[1] >= p[0] * (1.0 - 1e-9)));
}

#[test]
fn config_validation_and_tau_range() {
    let cfg = ConstantsConfig::default();
    cfg.validate().unwrap();
    assert_eq!(cfg.default_tau(1.0 / 16.0), 4.0);
    assert!(cfg.check_tau(4.0, 1.0 / 16.0).is_ok());
    assert!(cfg.check_tau(2.0, 1.0 / 16.0).is_err());
    assert!(cfg.check_tau(8.0, 1.0 / 16.0).is_err());
    let bad = ConstantsConfig { c: 0.9, ..cfg.clone() };
    assert!(bad.validate().is_err());
    let bad = ConstantsConfig { h0: 0.6, ..cfg.clone() };
    assert!(bad.validate().is_err());
    let parsed: ConstantsConfig = toml::from_str("c = 0.2").unwrap();
    assert_eq!(parsed.c, 0.2);
    assert_eq!(parsed.tau0, cfg.tau0);
    assert!(toml::from_str::<ConstantsConfig>("cc = 0.2").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weight_is_finite_on_positive_reals(c in 0.001f64..0.63, t in 1e-3f64..1e3) {
        let w = CarlemanWeight::new(c, 1.0).unwrap();
        prop_assert!(w.phi(t).unwrap().is_finite());
        prop_assert!(w.dphi(t).unwrap() < 0.0);
        prop_assert!(w.d2phi(t).unwrap() > 0.0);
    }

    #[test]
    fn weight_scales_linearly_in_tau(c in 0.01f64..0.6, tau in 0.1f64..100.0, t in 0.1f64..5.0) {
        let w = CarlemanWeight::new(c, tau).unwrap();
        prop_assert!((w.phi_tau_radial(t).unwrap() - tau * w.phi(t).unwrap()).abs() <= 1e-12 * tau * (1.0 + t.ln().abs()));
    }
}
