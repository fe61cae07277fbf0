use lattice_ucp::graph_core::*;
use lattice_ucp::reduction::HexagonalReduction;
use lattice_ucp::Error;
use proptest::prelude::*;

fn one_point(name: &str) -> OnePointGraph {
    preset(name).unwrap().one_point().unwrap().clone()
}

/// Independent Gamma-norm: G = sum e e^T inverted by cofactors (d = 2 only).
fn gamma_2d(gens: &[[f64; 2]], x: [f64; 2]) -> f64 {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for e in gens {
        a += e[0] * e[0];
        b += e[0] * e[1];
        c += e[1] * e[1];
    }
    let det = a * c - b * b;
    ((c * x[0] * x[0] - 2.0 * b * x[0] * x[1] + a * x[1] * x[1]) / det).sqrt()
}

#[test]
fn square_norm_is_euclidean() {
    let g = one_point("square2d");
    assert_eq!(gamma_norm(&g, &[3.0, 4.0]).unwrap(), 5.0);
    assert_eq!(gamma_norm(&g, &[0.0, 0.0]).unwrap(), 0.0);
}

#[test]
fn triangular_norm_matches_hand_inverse() {
    let g = one_point("triangular");
    let got = gamma_norm(&g, &[1.0, 0.0]).unwrap();
    assert!((got - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    let want = gamma_2d(&[[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]], [1.0, 0.0]);
    assert!((got - want).abs() < 1e-14);
}

#[test]
fn norm_rejects_wrong_dimension() {
    let g = one_point("square2d");
    assert!(matches!(gamma_norm(&g, &[1.0, 2.0, 3.0]), Err(Error::Input(_))));
}

#[test]
fn gram_inverse_is_accurate_for_every_one_point_preset() {
    for name in ["square2d", "triangular", "fig1c", "chain1d", "cubic3d"] {
        let g = one_point(name);
        let id = g.gram_inverse() * g.gram();
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - t).abs() <= 1e-12, "{name}");
            }
        }
    }
}

#[test]
fn generator_checks_reject_degenerate_sets() {
    let b = LatticeBasis::standard(2);
    assert!(OnePointGraph::from_lattice_coords("z", b.clone(), vec![vec![0, 0], vec![1, 0]]).is_err());
    assert!(OnePointGraph::from_lattice_coords("pm", b.clone(), vec![vec![1, 0], vec![-1, 0]]).is_err());
    assert!(OnePointGraph::from_lattice_coords("line", b.clone(), vec![vec![1, 0]]).is_err());
    assert!(OnePointGraph::new("offlattice", b, vec![vec![0.5, 0.0], vec![0.0, 1.0]]).is_err());
    assert!(LatticeBasis::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).is_err());
}

#[test]
fn square_window_small_ball() {
    let g = one_point("square2d");
    let w = enumerate_window(g.as_periodic(), 1.0, 1.5, 1).unwrap();
    assert_eq!(w.len(), 9);
    assert_eq!(w.interior_vertices().len(), 1);
    let o = w.interior_vertices()[0];
    assert_eq!(w.index(o), &[0, 0]);
}

#[test]
fn tiny_radius_gives_only_origin() {
    for name in ["square2d", "triangular", "fig1c"] {
        let g = one_point(name);
        let w = enumerate_window(g.as_periodic(), 1.0, 0.1, 1).unwrap();
        assert_eq!(w.len(), 1, "{name}");
        assert_eq!(w.interior_vertices().len(), 0);
    }
}

#[test]
fn reduced_triangular_window_matches_brute_force() {
    let hex = preset("hexagonal").unwrap();
    let red = HexagonalReduction::new(hex.periodic()).unwrap();
    let g = &red.reduced_graph;
    let (h, r) = (1.0 / 8.0, 2.0);
    let w = enumerate_window(g.as_periodic(), h, r, 0).unwrap();
    let s3 = 3f64.sqrt();
    let basis = [[1.5, s3 / 2.0], [0.0, s3]];
    let gens: Vec<[f64; 2]> = g.generators().iter().map(|e| [e[0], e[1]]).collect();
    let mut count = 0;
    for a in -60i64..=60 {
        for b in -60i64..=60 {
            let x = [
                h * (a as f64 * basis[0][0] + b as f64 * basis[1][0]),
                h * (a as f64 * basis[0][1] + b as f64 * basis[1][1]),
            ];
            if gamma_2d(&gens, x) <= r + 1e-12 {
                count += 1;
            }
        }
    }
    assert_eq!(w.len(), count);
}

#[test]
fn window_budget_is_enforced() {
    let g = one_point("square2d");
    match enumerate_window_with_budget(g.as_periodic(), 1.0 / 64.0, 4.0, 1, 1000) {
        Err(Error::Resource { required, budget }) => {
            assert_eq!(budget, 1000);
            assert!(required > 1000);
        }
        other => panic!("expected resource error, got {other:?}"),
    }
}

#[test]
fn window_masks_partition_and_lookup_is_bijective() {
    let g = one_point("triangular");
    let w = enumerate_window(g.as_periodic(), 0.25, 2.0, 1).unwrap();
    let b = w.boundary_mask();
    for v in 0..w.len() {
        assert!(w.interior_mask()[v] ^ b[v]);
        assert_eq!(w.find(w.index(v), w.class(v)), Some(v));
    }
    for v in w.interior_vertices() {
        assert!(w.neighbors(v).all(|(_, n)| n.is_some()));
    }
}

#[test]
fn window_ordering_is_lexicographic() {
    let hex = preset("hexagonal").unwrap();
    let w = enumerate_window(hex.periodic(), 0.5, 2.0, 1).unwrap();
    for v in 1..w.len() {
        let a = (w.index(v - 1).to_vec(), w.class(v - 1));
        let b = (w.index(v).to_vec(), w.class(v));
        assert!(a < b);
    }
}

#[test]
fn window_is_monotone_in_radius() {
    let g = one_point("fig1c");
    let small = enumerate_window(g.as_periodic(), 0.25, 1.0, 0).unwrap();
    let large = enumerate_window(g.as_periodic(), 0.25, 1.7, 0).unwrap();
    for v in 0..small.len() {
        assert!(large.find(small.index(v), 0).is_some());
    }
}

#[test]
fn validation_of_presets() {
    for name in ["square2d", "triangular", "fig1c", "hexagonal", "octagonal", "hex_star", "square_subdivision"] {
        let p = preset(name).unwrap();
        let r = validate(p.periodic());
        assert!(r.valid, "{name}: {:?}", r.failures());
    }
    assert_eq!(validate(preset("hexagonal").unwrap().periodic()).kind, GraphKind::HexagonalType);
    let k = validate(preset("kagome").unwrap().periodic());
    assert_eq!(k.kind, GraphKind::General);
}

#[test]
fn validation_rejects_lattice_equivalent_offsets() {
    let g = MultiPointGraph::new(
        "bad",
        LatticeBasis::standard(2),
        vec![vec![0.0, 0.0], vec![1.0, 0.0]],
        vec![EdgeRule::new(0, 1, vec![0, 0]), EdgeRule::new(1, 0, vec![0, 0])],
        GraphKind::General,
    )
    .unwrap();
    let r = validate(&g);
    assert!(!r.valid);
    assert!(r.failures().iter().any(|c| c.detail.contains("offsets differ by a lattice vector")));
}

#[test]
fn validation_rejects_disconnected_graph() {
    let g = MultiPointGraph::from_generators("line", LatticeBasis::standard(2), &[vec![1, 0]]).unwrap();
    let r = validate(&g);
    assert!(!r.valid);
    assert!(r.failures().iter().any(|c| c.detail.contains("not connected")));
}

#[test]
fn canonical_rescale_targets() {
    let (g, s) = canonical_rescale(&one_point("square2d"));
    assert!((s - 1.0 / (8.0 * 2f64.sqrt())).abs() < 1e-15);
    assert!((g.max_generator_length() - 0.0883883476).abs() < 1e-9);
    let (g2, _) = canonical_rescale(&g);
    assert!((g2.max_generator_length() - g.max_generator_length()).abs() < 1e-15);
    let chain = OnePointGraph::from_lattice_coords("c", LatticeBasis::standard(1), vec![vec![2]]).unwrap();
    let (_, s1) = canonical_rescale(&chain);
    assert!((s1 - 1.0 / 16.0).abs() < 1e-15);
    for name in ["triangular", "fig1c", "cubic3d"] {
        let (g, _) = canonical_rescale(&one_point(name));
        let d = g.dim() as f64;
        assert!(g.generators().iter().all(|e| e.norm() < 1.0 / (4.0 * d.sqrt())));
    }
}

#[test]
fn spec_file_round_trip_and_unknown_fields() {
    let hex = preset("hexagonal").unwrap();
    let text = GraphSpec::from_multi_point(hex.periodic()).to_toml_string();
    let back = GraphSpec::from_toml_str(&text).unwrap().build_periodic().unwrap();
    assert_eq!(back.rules(), hex.periodic().rules());
    assert_eq!(back.kind(), GraphKind::HexagonalType);
    let bad = "dimension = 1\nbasis = [[1.0]]\nedges = [[1.0]]\ncolour = 3\n";
    assert!(GraphSpec::from_toml_str(bad).is_err());
}

proptest! {
    #[test]
    fn gamma_norm_is_a_norm(
        name in prop::sample::select(vec!["square2d", "triangular", "fig1c"]),
        x in prop::array::uniform2(-10.0f64..10.0),
        y in prop::array::uniform2(-10.0f64..10.0),
        lambda in -5.0f64..5.0,
    ) {
        let g = one_point(name);
        let nx = gamma_norm(&g, &x).unwrap();
        let ny = gamma_norm(&g, &y).unwrap();
        let s = [x[0] + y[0], x[1] + y[1]];
        prop_assert!(gamma_norm(&g, &s).unwrap() <= nx + ny + 1e-10);
        let l = [lambda * x[0], lambda * x[1]];
        prop_assert!((gamma_norm(&g, &l).unwrap() - lambda.abs() * nx).abs() <= 1e-10 * (1.0 + nx));
    }
}
