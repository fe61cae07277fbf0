//! Elimination of satellite classes: hexagonal-type and star graphs reduced to
//! operators on the first point class.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graph_core::{enumerate_window, in_ball, GraphKind, MultiPointGraph, OnePointGraph, VertexWindow};
use crate::harmonic_solver::HarmonicSolver;
use crate::operators::{assemble_multipoint, GridFunction, PathClass, SparseOperatorMatrix};
use crate::{Error, Result};

/// Lattice offset of a path through a satellite, keyed in lattice coordinates.
type Offset = Vec<i64>;

fn add(a: &[i64], b: &[i64]) -> Offset {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn neg(a: &[i64]) -> Offset {
    a.iter().map(|x| -x).collect()
}

/// Sign-canonical representative: first nonzero coordinate positive.
fn canonical(a: &[i64]) -> Offset {
    match a.iter().find(|&&x| x != 0) {
        Some(&x) if x < 0 => neg(a),
        _ => a.to_vec(),
    }
}

/// Checks that every edge of a satellite class (class index >= 1) ends in class 0.
fn check_star_structure(graph: &MultiPointGraph) -> Result<()> {
    if graph.num_classes() < 2 {
        return Err(Error::input("not a star graph with satellite classes"));
    }
    for r in graph.rules() {
        if r.from >= 1 && r.to != 0 {
            return Err(Error::input(format!(
                "class {} has an edge to class {}; satellites may only connect to class 1",
                r.from + 1,
                r.to + 1
            )));
        }
    }
    for c in 0..graph.num_classes() {
        if graph.degree(c) == 0 {
            return Err(Error::input(format!("class {} has no edges", c + 1)));
        }
    }
    Ok(())
}

/// Smallest degree over satellite classes; `h^2 max|V|` must stay below it.
fn min_satellite_degree(graph: &MultiPointGraph) -> usize {
    (1..graph.num_classes()).map(|c| graph.degree(c)).min().unwrap_or(0)
}

fn check_smallness(graph: &MultiPointGraph, h: f64, m: f64) -> Result<()> {
    let k = min_satellite_degree(graph) as f64;
    if !(h * h * m < k) {
        let bound = if m > 0.0 { (k / m).sqrt() } else { f64::INFINITY };
        return Err(Error::input(format!(
            "smallness condition h^2 max|V| < {k} fails (h^2 max|V| = {:.6e}); need h < {bound:.6e}",
            h * h * m
        )));
    }
    Ok(())
}

/// Reduced stencil weights at `V = 0` in units of `h^-2`, after scaling by `scale`.
/// Every path `0 -> c -> 0` through a satellite of degree `d` contributes `1/d`.
fn free_weights(graph: &MultiPointGraph, scale: f64) -> BTreeMap<Offset, f64> {
    let mut w: BTreeMap<Offset, f64> = BTreeMap::new();
    for r in graph.rules().iter().filter(|r| r.from == 0) {
        if r.to == 0 {
            *w.entry(r.shift.clone()).or_default() += scale;
            continue;
        }
        let d = graph.degree(r.to) as f64;
        for back in graph.rules().iter().filter(|b| b.from == r.to) {
            *w.entry(add(&r.shift, &back.shift)).or_default() += scale / d;
        }
    }
    w
}

/// Hexagonal-type structure: generators `e_1..e_k` from class 1 to class 2 and the
/// reduced generators `eta_j = e_m - e_n`, `m < n`, with coincident differences merged.
#[derive(Clone, Debug)]
pub struct HexagonalReduction {
    pub source: MultiPointGraph,
    pub k: usize,
    /// Lattice coordinates of `e_m`, the shift of the `m`-th edge from class 1 to class 2.
    pub e_shifts: Vec<Offset>,
    pub reduced_graph: OnePointGraph,
    /// For each reduced generator, every pair `(m, n)` with `m < n` producing it (0-based).
    pub pair_map: Vec<Vec<(usize, usize)>>,
    /// Number of pairs merged into each reduced generator.
    pub multiplicity: Vec<usize>,
}

impl HexagonalReduction {
    pub fn new(source: &MultiPointGraph) -> Result<Self> {
        if source.kind() != GraphKind::HexagonalType {
            return Err(Error::input(format!("graph kind is {}, expected hexagonal_type", source.kind())));
        }
        if source.num_classes() != 2 {
            return Err(Error::input("hexagonal-type graphs have exactly two point classes"));
        }
        check_star_structure(source)?;
        if source.rules().iter().any(|r| r.from == 0 && r.to == 0) {
            return Err(Error::input("hexagonal-type graphs have no edges inside class 1"));
        }
        let e_shifts: Vec<Offset> = source.rules().iter().filter(|r| r.from == 0).map(|r| r.shift.clone()).collect();
        let k = e_shifts.len();
        if k < 2 || source.degree(1) != k {
            return Err(Error::input("both classes of a hexagonal-type graph need the same degree k >= 2"));
        }
        let mut gens: Vec<Offset> = Vec::new();
        let mut pair_map: Vec<Vec<(usize, usize)>> = Vec::new();
        for m in 0..k {
            for n in m + 1..k {
                let eta: Offset = e_shifts[m].iter().zip(&e_shifts[n]).map(|(a, b)| a - b).collect();
                if eta.iter().all(|&x| x == 0) {
                    return Err(Error::input(format!("edges {} and {} coincide", m + 1, n + 1)));
                }
                match gens.iter().position(|g| *g == eta || *g == neg(&eta)) {
                    Some(j) => pair_map[j].push((m, n)),
                    None => {
                        gens.push(eta);
                        pair_map.push(vec![(m, n)]);
                    }
                }
            }
        }
        let multiplicity = pair_map.iter().map(Vec::len).collect();
        let reduced_graph =
            OnePointGraph::from_lattice_coords(format!("{}_reduced", source.name), source.basis().clone(), gens)?;
        Ok(Self { source: source.clone(), k, e_shifts, reduced_graph, pair_map, multiplicity })
    }
}

/// Reduced operator on class 1 of a star or hexagonal-type graph.
///
/// With `scale` the degree of class 1, row `x` of `matrix` equals `scale * (H_h f)(x)`
/// after substituting every satellite value, and decomposes as
/// `h^-2 sum_o w_o (f(x + h o) - f(x)) + sum_o V_o(x + h o) f(x + h o)`.
#[derive(Clone, Debug)]
pub struct ReducedOperator {
    pub scale: f64,
    pub reduced_graph: OnePointGraph,
    pub window: VertexWindow,
    pub matrix: SparseOperatorMatrix,
    /// Rows where every substituted value lies in the source window interior.
    pub valid: Vec<bool>,
    /// Nonzero stencil offsets (both signs) with their free weights `w_o`.
    pub weights: BTreeMap<Offset, f64>,
    /// Path class of the effective potentials (zero offset included).
    pub paths: PathClass,
    /// `V_o` per offset of `paths`, stored at the shifted vertex `x + h o`.
    pub potentials: Vec<GridFunction>,
    /// Largest `|V_o|` over valid rows.
    pub potential_max: f64,
    /// A priori bound `scale M (1 + sum over satellite edges of 1/(d (d - h^2 M)))`.
    pub potential_bound: f64,
    /// Source vertex of each reduced vertex, when present.
    pub source_vertex: Vec<Option<usize>>,
}

/// Ratio of Gamma-norms: `|x|_source <= rho |x|_reduced` for every `x`.
fn norm_ratio(source: &MultiPointGraph, reduced: &OnePointGraph) -> Result<f64> {
    let src = source.metric().ok_or_else(|| Error::input("source graph has no Gram metric"))?;
    // sup |x|^2_{G_s^-1} / |x|^2_{G_r^-1} = lambda_max(G_r^{1/2} G_s^-1 G_r^{1/2}).
    let chol = reduced
        .gram()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::input("reduced Gram matrix is not positive definite"))?;
    let l = chol.l();
    let m: DMatrix<f64> = l.transpose() * &src.gram_inverse * &l;
    Ok(m.symmetric_eigenvalues().max().max(0.0).sqrt())
}

/// Assembles the reduced operator on a one-point window whose stencils stay inside `source_window`.
fn assemble_reduced(
    graph: &MultiPointGraph,
    reduced_graph: OnePointGraph,
    source_window: &VertexWindow,
    potential: &GridFunction,
) -> Result<ReducedOperator> {
    potential.check_window(source_window)?;
    let h = source_window.h;
    let m = potential.sup_norm();
    check_smallness(graph, h, m)?;
    let scale = graph.degree(0) as f64;
    let weights = free_weights(graph, scale);
    let weights: BTreeMap<Offset, f64> = weights.into_iter().filter(|(o, _)| o.iter().any(|&x| x != 0)).collect();

    // Shrink by two reduced hops so the reduced collar stays inside the source window.
    let rho = norm_ratio(graph, &reduced_graph)?;
    let src_metric = graph.metric().expect("checked in norm_ratio");
    let edge = graph.rules().iter().map(|r| src_metric.norm(graph.displacement(r).as_slice())).fold(0.0, f64::max);
    let hop_gamma = weights
        .keys()
        .map(|o| src_metric.norm(graph.basis().point(o).as_slice()))
        .fold(edge, f64::max);
    let radius = (source_window.radius - 2.0 * hop_gamma * h) / rho;
    if !(radius > 0.0) {
        return Err(Error::input("source window too small for the reduced stencil"));
    }
    let window = enumerate_window(reduced_graph.as_periodic(), h, radius, 1)?;
    let n = window.len();
    let vals = potential.values();
    let h2 = 1.0 / (h * h);
    let source_vertex: Vec<Option<usize>> = (0..n).map(|v| source_window.find(window.index(v), 0)).collect();

    let mut offsets: Vec<Offset> = vec![vec![0; graph.dim()]];
    offsets.extend(weights.keys().cloned());
    let paths = PathClass::from_offsets(2, offsets);
    let slot: BTreeMap<Offset, usize> = paths.offsets.iter().cloned().enumerate().map(|(i, o)| (o, i)).collect();
    let mut pot = vec![vec![0.0; n]; paths.len()];

    let mut trip = Vec::new();
    let mut valid = vec![false; n];
    let mut potential_max = 0.0f64;
    for v in 0..n {
        let row = source_vertex[v].filter(|&s| window.is_interior(v) && source_window.is_interior(s)).and_then(|s| {
            let mut coef: BTreeMap<Offset, f64> = BTreeMap::new();
            *coef.entry(vec![0; graph.dim()]).or_default() += -(graph.degree(0) as f64) * h2 + vals[s];
            for (ri, y) in source_window.neighbors(s) {
                let y = y?;
                let r = &graph.rules()[ri];
                if r.to == 0 {
                    *coef.entry(r.shift.clone()).or_default() += h2;
                    continue;
                }
                if !source_window.is_interior(y) {
                    return None;
                }
                let den = graph.degree(r.to) as f64 - h * h * vals[y];
                for (bi, z) in source_window.neighbors(y) {
                    z?;
                    let o = add(&r.shift, &graph.rules()[bi].shift);
                    *coef.entry(o).or_default() += h2 / den;
                }
            }
            Some(coef)
        });
        let cols: Option<Vec<(usize, f64)>> = row.as_ref().and_then(|coef| {
            coef.iter().map(|(o, c)| window.shifted(v, o, 0).map(|u| (u, scale * c))).collect()
        });
        match (row, cols) {
            (Some(coef), Some(cols)) => {
                valid[v] = true;
                trip.extend(cols.iter().map(|&(u, c)| (v, u, c)));
                for (o, c) in &coef {
                    let free = if o.iter().all(|&x| x == 0) {
                        -weights.values().sum::<f64>()
                    } else {
                        weights.get(o).copied().unwrap_or(0.0)
                    };
                    let value = scale * c - free * h2;
                    let at = window.shifted(v, o, 0).expect("column exists");
                    pot[slot[o]][at] = value;
                    potential_max = potential_max.max(value.abs());
                }
            }
            _ => trip.push((v, v, 1.0)),
        }
    }
    let matrix = SparseOperatorMatrix::from_triplets(n, n, trip)?;
    let sat_sum: f64 = graph
        .rules()
        .iter()
        .filter(|r| r.from == 0 && r.to != 0)
        .map(|r| {
            let d = graph.degree(r.to) as f64;
            1.0 / (d * (d - h * h * m))
        })
        .sum();
    let potentials = pot.into_iter().map(|p| GridFunction::new(&window, p)).collect::<Result<Vec<_>>>()?;
    Ok(ReducedOperator {
        scale,
        reduced_graph,
        window,
        matrix,
        valid,
        weights,
        paths,
        potentials,
        potential_max,
        potential_bound: scale * m * (1.0 + sat_sum),
        source_vertex,
    })
}

/// `H_{1,h}` for a hexagonal-type graph: `k` times the class-1 rows of `H_h` after
/// eliminating class 2, so that `H_h f(x) = (1/k) H_{1,h} f_1(x)`.
pub fn build_reduced_operator(
    red: &HexagonalReduction,
    source_window: &VertexWindow,
    potential: &GridFunction,
) -> Result<ReducedOperator> {
    assemble_reduced(&red.source, red.reduced_graph.clone(), source_window, potential)
}

/// Star-graph reduction: every satellite class is eliminated, leaving an operator on class 1
/// whose stencil reaches two hops.
pub fn reduce_star(graph: &MultiPointGraph, source_window: &VertexWindow, potential: &GridFunction) -> Result<ReducedOperator> {
    if graph.num_classes() < 2 {
        return Err(Error::input("not a star graph with satellite classes"));
    }
    if !matches!(graph.kind(), GraphKind::Star | GraphKind::HexagonalType) {
        return Err(Error::input(format!("graph kind is {}, expected star", graph.kind())));
    }
    check_star_structure(graph)?;
    let weights = free_weights(graph, 1.0);
    let mut gens: Vec<Offset> = weights
        .keys()
        .filter(|o| o.iter().any(|&x| x != 0))
        .map(|o| canonical(o))
        .collect();
    gens.sort();
    gens.dedup();
    let reduced_graph =
        OnePointGraph::from_lattice_coords(format!("{}_reduced", graph.name), graph.basis().clone(), gens)?;
    assemble_reduced(graph, reduced_graph, source_window, potential)
}

/// Satellite values from class-1 values: `f_c(y) = (d_c - h^2 V(y))^-1 sum_{z ~ y} f_1(z)`.
/// Satellites with a neighbour outside the window are left at 0 and flagged `false`.
pub fn eliminate_satellites(
    graph: &MultiPointGraph,
    window: &VertexWindow,
    potential: &GridFunction,
    f1: &[f64],
) -> Result<(GridFunction, Vec<bool>)> {
    check_star_structure(graph)?;
    potential.check_window(window)?;
    if f1.len() != window.len() {
        return Err(Error::input("function length does not match the window"));
    }
    check_smallness(graph, window.h, potential.sup_norm())?;
    let vals = potential.values();
    let mut out = vec![0.0; window.len()];
    let mut filled = vec![false; window.len()];
    for v in 0..window.len() {
        let c = window.class(v);
        if c == 0 {
            out[v] = f1[v];
            filled[v] = true;
            continue;
        }
        let nbrs: Option<Vec<usize>> = window.neighbors(v).map(|(_, z)| z).collect();
        if let Some(nbrs) = nbrs {
            let den = graph.degree(c) as f64 - window.h * window.h * vals[v];
            out[v] = nbrs.iter().map(|&z| f1[z]).sum::<f64>() / den;
            filled[v] = true;
        }
    }
    Ok((GridFunction::new(window, out)?, filled))
}

/// Largest `|sum_classes ||f_c||^2_{B_r} - ||f||^2_{B_r}|` over the radii.
pub fn norm_equivalence_check(window: &VertexWindow, f: &GridFunction, radii: &[f64]) -> Result<f64> {
    f.check_window(window)?;
    let vals = f.values();
    let mut worst = 0.0f64;
    for &r in radii {
        let mut total = 0.0;
        let mut by_class = vec![0.0; window.num_classes()];
        for v in 0..window.len() {
            if in_ball(window.norm(v), r) {
                total += vals[v] * vals[v];
                by_class[window.class(v)] += vals[v] * vals[v];
            }
        }
        worst = worst.max((by_class.iter().sum::<f64>() - total).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub samples: usize,
    pub valid_rows: usize,
    /// Largest `max_valid |H_{1,h} f_1| / max |f_1|` over the samples.
    pub max_residual: f64,
    /// Largest residual of the source solve, `max_interior |H_h f| / (max|H_h| max|f|)`.
    pub source_residual: f64,
}

/// Solves `H_h f = 0` with seeded boundary data and applies the reduced operator to `f_1`.
pub fn reduction_consistency(
    source_window: &VertexWindow,
    potential: &GridFunction,
    reduced: &ReducedOperator,
    samples: usize,
    seed: u64,
) -> Result<ConsistencyReport> {
    let op = assemble_multipoint(source_window, potential)?;
    let solver = HarmonicSolver::new(&op, source_window)?;
    let mut max_residual = 0.0f64;
    let mut source_residual = 0.0f64;
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let g: Vec<f64> = (0..solver.num_boundary()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let f = solver.extend(&g)?;
        let hf = op.apply(&f);
        let fmax = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let src = source_window.interior_vertices().into_iter().map(|v| hf[v].abs()).fold(0.0, f64::max);
        source_residual = source_residual.max(src / (op.max_abs() * fmax));
        let f1: Vec<f64> = reduced.source_vertex.iter().map(|s| s.map_or(0.0, |s| f[s])).collect();
        let r = reduced.matrix.apply(&f1);
        let f1max = f1.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let worst = (0..f1.len()).filter(|&v| reduced.valid[v]).map(|v| r[v].abs()).fold(0.0, f64::max);
        if f1max > 0.0 {
            max_residual = max_residual.max(worst / f1max);
        }
    }
    Ok(ConsistencyReport {
        samples,
        valid_rows: reduced.valid.iter().filter(|&&b| b).count(),
        max_residual,
        source_residual,
    })
}
