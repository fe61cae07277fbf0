//! Frozen-coefficient symbols of the conjugated operator and grid certification of their lower bound.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::carleman::{phi_tau_grad_hess, CarlemanWeight, ConstantsConfig};
use crate::graph_core::{in_ball, OnePointGraph};
use crate::{Error, Result};

const TWO_PI: f64 = std::f64::consts::TAU;

/// A base point `xbar` in the annulus and a frequency `xi`, with the weight and mesh size.
#[derive(Clone, Debug)]
pub struct SymbolPoint<'a> {
    pub graph: &'a OnePointGraph,
    pub weight: CarlemanWeight,
    pub xbar: Vec<f64>,
    pub h: f64,
    pub xi: Vec<f64>,
}

impl<'a> SymbolPoint<'a> {
    /// Checks `1/2 < |xbar|_Gamma <= 2` and the admissible tau range.
    pub fn new(
        graph: &'a OnePointGraph,
        weight: CarlemanWeight,
        xbar: Vec<f64>,
        h: f64,
        xi: Vec<f64>,
        config: &ConstantsConfig,
    ) -> Result<Self> {
        let d = graph.dim();
        if xbar.len() != d || xi.len() != d {
            return Err(Error::input("base point and frequency must have the graph dimension"));
        }
        let r = graph.gamma_norm(&xbar)?;
        if in_ball(r, 0.5) || !in_ball(r, 2.0) {
            return Err(Error::input(format!("base point has |x|_Gamma = {r}, outside (1/2, 2]")));
        }
        config.check_tau(weight.tau, h)?;
        Ok(Self { graph, weight, xbar, h, xi })
    }

    /// `h xi_j = 2 pi h <xi, e_j>`.
    pub fn h_xi(&self) -> Vec<f64> {
        self.graph
            .generators()
            .iter()
            .map(|e| TWO_PI * self.h * e.iter().zip(&self.xi).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    HighFrequency,
    NearCharacteristic,
    LowFrequencyFar,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymbolValues {
    pub ps: f64,
    pub pa: f64,
    pub q1: f64,
    pub q2: f64,
    /// `|xi|_E`, the Euclidean norm of `(xi_j)`.
    pub xi_e_norm: f64,
    pub region: Region,
}

/// Symbols frozen at one base point: `g_j = <grad phi_tau, e_j>` and `H_ij = e_i^T hess phi_tau e_j`.
#[derive(Clone, Debug)]
struct Frozen {
    tau: f64,
    h: f64,
    g: DVector<f64>,
    hess: DMatrix<f64>,
}

impl Frozen {
    fn new(w: &CarlemanWeight, graph: &OnePointGraph, xbar: &[f64], h: f64) -> Result<Self> {
        let der = phi_tau_grad_hess(w, graph, xbar)?;
        Ok(Self { tau: w.tau, h, g: der.grad_e, hess: der.hess_e })
    }

    /// `(ps, pa, q1, q2)` at the scaled frequency `t_j = h xi_j`.
    fn eval(&self, t: &[f64]) -> (f64, f64, f64, f64) {
        let (h, tau) = (self.h, self.tau);
        let k = t.len();
        let mut ps = 0.0;
        let mut pa = 0.0;
        for j in 0..k {
            let (s, c) = t[j].sin_cos();
            ps += 2.0 * (c - 1.0) / (h * h) + self.g[j] * self.g[j] * c;
            pa += 2.0 * self.g[j] * s / h;
        }
        let mut q1 = 0.0;
        let mut q2 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let hij = self.hess[(i, j)];
                q1 += t[i].sin() * t[j].sin() * hij;
                let plus = (self.g[i] + self.g[j]).powi(2) * (t[i] - t[j]).cos();
                let minus = (self.g[i] - self.g[j]).powi(2) * (t[i] + t[j]).cos();
                q2 += hij * (plus - minus);
            }
        }
        (ps, pa, 4.0 * tau * q1 / (h * h), tau * q2)
    }

    fn grad_norm(&self) -> f64 {
        self.g.norm()
    }
}

fn xi_e_from_t(t: &[f64], h: f64) -> f64 {
    t.iter().map(|x| x * x).sum::<f64>().sqrt() / h
}

/// Distance from `xi_E` to the joint characteristic set `{|eta| = |grad_E phi|, <eta, grad_E phi> = 0}`
/// within `range(E)`, given `xi_E` and `grad_E phi` as k-vectors. Infinite in dimension one, where the set is empty.
fn char_distance_e(xi_e: &DVector<f64>, g: &DVector<f64>, d: usize) -> f64 {
    let rho = g.norm();
    if d < 2 {
        return f64::INFINITY;
    }
    let a = xi_e.dot(g) / rho;
    let b = (xi_e - g * (a / rho)).norm();
    (a * a + (b - rho).powi(2)).sqrt()
}

fn classify(xi_e_norm: f64, dist: f64, kappa: f64, gamma0: f64, tau: f64) -> Region {
    if xi_e_norm >= kappa * tau {
        Region::HighFrequency
    } else if dist <= gamma0 * tau {
        Region::NearCharacteristic
    } else {
        Region::LowFrequencyFar
    }
}

/// Evaluates the symbols at `p`, with `xi_j = 2 pi <xi, e_j>`, and classifies the frequency.
pub fn eval_symbols(p: &SymbolPoint<'_>, kappa: f64, gamma0: f64) -> Result<SymbolValues> {
    let frozen = Frozen::new(&p.weight, p.graph, &p.xbar, p.h)?;
    let t = p.h_xi();
    let (ps, pa, q1, q2) = frozen.eval(&t);
    let xi_e = DVector::from_iterator(t.len(), t.iter().map(|x| x / p.h));
    let xi_e_norm = xi_e.norm();
    let dist = char_distance_e(&xi_e, &frozen.g, p.graph.dim());
    Ok(SymbolValues { ps, pa, q1, q2, xi_e_norm, region: classify(xi_e_norm, dist, kappa, gamma0, p.weight.tau) })
}

/// Distance from `xi_E = (2 pi <xi, e_j>)_j` to the characteristic set at `xbar`.
pub fn characteristic_distance(graph: &OnePointGraph, w: &CarlemanWeight, xbar: &[f64], xi: &[f64]) -> Result<f64> {
    if xi.len() != graph.dim() {
        return Err(Error::input("frequency dimension does not match the graph"));
    }
    let der = phi_tau_grad_hess(w, graph, xbar)?;
    let xi_e = graph.e_matrix() * DVector::from_column_slice(xi) * TWO_PI;
    Ok(char_distance_e(&xi_e, &der.grad_e, graph.dim()))
}

/// Base points in the annulus: `radial` radii `1/2 + 3(i+1)/(2 radial)` times `angular` directions
/// (evenly spaced for d = 2, seeded random otherwise).
pub fn xbar_grid(graph: &OnePointGraph, radial: usize, angular: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if radial == 0 || angular == 0 {
        return Err(Error::input("base-point grid must be nonempty"));
    }
    let d = graph.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (0..angular)
        .map(|a| match d {
            1 => vec![if a % 2 == 0 { 1.0 } else { -1.0 }],
            2 => {
                let th = TWO_PI * a as f64 / angular as f64;
                vec![th.cos(), th.sin()]
            }
            _ => (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        })
        .collect();
    let mut out = Vec::with_capacity(radial * angular);
    for i in 0..radial {
        let r = 0.5 + 1.5 * (i + 1) as f64 / radial as f64;
        for dir in &dirs {
            let n = graph.gamma_norm(dir)?;
            out.push(dir.iter().map(|x| x * r / n).collect());
        }
    }
    Ok(out)
}

/// Dual coordinate `theta_l = (l - floor(n/2)) / n`; doubling `n` keeps every old grid point.
pub fn theta_coordinate(l: usize, n: usize) -> f64 {
    (l as f64 - (n / 2) as f64) / n as f64
}

/// Scaled frequencies `t_j = h xi_j = 2 pi <theta, n_j>` for dual coordinates `theta`.
fn t_from_theta(graph: &OnePointGraph, theta: &[f64]) -> Vec<f64> {
    graph
        .generator_coords()
        .iter()
        .map(|n| TWO_PI * n.iter().zip(theta).map(|(a, b)| *a as f64 * b).sum::<f64>())
        .collect()
}

fn grid_point(flat: usize, n: usize, d: usize) -> Vec<f64> {
    let mut idx = vec![0; d];
    let mut r = flat;
    for i in (0..d).rev() {
        idx[i] = r % n;
        r /= n;
    }
    idx.iter().map(|&l| theta_coordinate(l, n)).collect()
}

fn grid_len(n: usize, d: usize) -> Result<usize> {
    n.checked_pow(d as u32)
        .filter(|&m| m <= 1 << 26)
        .ok_or_else(|| Error::input(format!("frequency grid {n}^{d} is too large")))
}

/// Constants of the high-frequency step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HighFrequencyConstants {
    /// `min |2 sum_j (cos(h xi_j) - 1)| / (h^2 |xi|_E^2)` over the grid.
    pub c1: f64,
    /// `max sum_j <grad phi_tau, e_j>^2 / tau^2` over the base points.
    pub c2: f64,
    /// `sqrt(2 c2 / c1)` unless fixed by configuration.
    pub kappa: f64,
}

/// Fits `c1` over the frequency grid and `c2` over the base points.
pub fn fit_high_frequency_constants(
    graph: &OnePointGraph,
    w: &CarlemanWeight,
    xbars: &[Vec<f64>],
    grid: usize,
    kappa: Option<f64>,
) -> Result<HighFrequencyConstants> {
    let d = graph.dim();
    let m = grid_len(grid, d)?;
    let c1 = (0..m)
        .into_par_iter()
        .filter_map(|f| {
            let t = t_from_theta(graph, &grid_point(f, grid, d));
            let n2: f64 = t.iter().map(|x| x * x).sum();
            (n2 > 0.0).then(|| (2.0 * t.iter().map(|x| x.cos() - 1.0).sum::<f64>()).abs() / n2)
        })
        .reduce(|| f64::INFINITY, f64::min);
    let mut c2 = 0.0f64;
    for x in xbars {
        let der = phi_tau_grad_hess(w, graph, x)?;
        c2 = c2.max(der.grad_e.norm_squared() / (w.tau * w.tau));
    }
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(Error::input("frequency grid contains no nonzero frequency"));
    }
    Ok(HighFrequencyConstants { c1, c2, kappa: kappa.unwrap_or((2.0 * c2 / c1).sqrt()) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionSummary {
    pub region: Region,
    pub points: usize,
    /// Minimum of `R` over the region.
    pub min_r: Option<f64>,
    /// Minimum of the quantity that carries the bound in this region: `ps^2` (high frequency),
    /// `c0 q` (near the characteristic set) or `ps^2 + pa^2` (elsewhere), over the same denominator.
    pub min_partial: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    pub h: f64,
    pub tau: f64,
    pub c0: f64,
    pub gamma0: f64,
    pub grid: usize,
    pub xbar_points: usize,
    pub constants: HighFrequencyConstants,
    /// Empirical `min ps^2 / (|xi|^4 + tau^2 |xi|^2 + tau^4)` on the high-frequency region.
    pub c_hf: Option<f64>,
    /// `c1^2 / 4 / (1 + kappa^-2 + kappa^-4)`, the bound implied by `c1` and `kappa`.
    pub c_hf_implied: f64,
    /// `max |ps - (|grad_E phi|^2 - |xi|_E^2)| / (delta0^2 tau^2)` over `|xi|_E <= kappa tau`.
    pub k_small_frequency: f64,
    pub min_r: f64,
    pub argmin_xbar: Vec<f64>,
    pub argmin_theta: Vec<f64>,
    /// Largest finite-difference slope of `R` in dual coordinates over the whole grid.
    pub lipschitz_max: f64,
    /// `min_p (R(p) - L(p) sqrt(d) / (2 n))` with `L(p)` the local finite-difference slope at `p`.
    pub min_r_discounted: f64,
    /// Lower bound for `R` over the whole torus after bisecting cells until the discounted value
    /// exceeds the floor and half the centre value; each leaf contributes `R(c) - L(c) r` with `r` its half diagonal.
    pub certified_lower_bound: f64,
    /// Number of refined cells evaluated and the deepest bisection level reached.
    pub refined_cells: usize,
    pub max_depth: usize,
    pub regions: Vec<RegionSummary>,
    pub floor: f64,
    pub pass: bool,
}

#[derive(Clone, Copy)]
struct Acc {
    min_r: f64,
    key: (usize, usize),
    min_disc: f64,
    certified: f64,
    refined: usize,
    depth: usize,
    lip: f64,
    c_hf: f64,
    k_small: f64,
    region_min: [f64; 3],
    region_partial: [f64; 3],
    region_count: [usize; 3],
}

impl Acc {
    fn new() -> Self {
        Self {
            min_r: f64::INFINITY,
            key: (usize::MAX, usize::MAX),
            min_disc: f64::INFINITY,
            certified: f64::INFINITY,
            refined: 0,
            depth: 0,
            lip: 0.0,
            c_hf: f64::INFINITY,
            k_small: 0.0,
            region_min: [f64::INFINITY; 3],
            region_partial: [f64::INFINITY; 3],
            region_count: [0; 3],
        }
    }

    fn merge(mut self, o: Self) -> Self {
        if o.min_r < self.min_r || (o.min_r == self.min_r && o.key < self.key) {
            self.min_r = o.min_r;
            self.key = o.key;
        }
        self.min_disc = self.min_disc.min(o.min_disc);
        self.certified = self.certified.min(o.certified);
        self.refined += o.refined;
        self.depth = self.depth.max(o.depth);
        self.lip = self.lip.max(o.lip);
        self.c_hf = self.c_hf.min(o.c_hf);
        self.k_small = self.k_small.max(o.k_small);
        for i in 0..3 {
            self.region_min[i] = self.region_min[i].min(o.region_min[i]);
            self.region_partial[i] = self.region_partial[i].min(o.region_partial[i]);
            self.region_count[i] += o.region_count[i];
        }
        self
    }
}

/// Grid certification of `ps^2 + pa^2 + c0 q >= R_min (|xi|_E^4 + tau^2 |xi|_E^2 + tau^4)` over
/// base points `xbars` and a `grid^d` lattice of dual coordinates covering the frequency torus.
pub fn certify_lower_bound(
    graph: &OnePointGraph,
    config: &ConstantsConfig,
    h: f64,
    tau: f64,
    xbars: &[Vec<f64>],
    grid: usize,
) -> Result<CertificationReport> {
    if xbars.is_empty() || grid == 0 {
        return Err(Error::input("certification grids must be nonempty"));
    }
    config.check_tau(tau, h)?;
    let w = CarlemanWeight::new(config.c, tau)?;
    let d = graph.dim();
    let m = grid_len(grid, d)?;
    let consts = fit_high_frequency_constants(graph, &w, xbars, grid, config.kappa)?;
    let kappa = consts.kappa;
    let c0 = config.c0;
    let gamma0 = config.gamma0;
    let frozen: Vec<Frozen> = xbars.iter().map(|x| Frozen::new(&w, graph, x, h)).collect::<Result<_>>()?;
    let ts: Vec<Vec<f64>> = (0..m).map(|f| t_from_theta(graph, &grid_point(f, grid, d))).collect();
    let strides: Vec<usize> = (0..d).map(|i| grid.pow((d - 1 - i) as u32)).collect();
    let cell = 1.0 / grid as f64;
    let half_diag = (d as f64).sqrt() * cell / 2.0;
    let delta2 = config.delta0 * config.delta0 * tau * tau;
    let floor = config.symbol_floor;

    let acc = frozen
        .par_iter()
        .enumerate()
        .map(|(xi_idx, fz)| {
            let rho2 = fz.grad_norm().powi(2);
            let r_at = |theta: &[f64]| {
                let t = t_from_theta(graph, theta);
                let (ps, pa, q1, q2) = fz.eval(&t);
                let n2 = xi_e_from_t(&t, h).powi(2);
                (ps * ps + pa * pa + c0 * (q1 + q2)) / (n2 * n2 + tau * tau * n2 + tau.powi(4))
            };
            let mut r = vec![0.0; m];
            let mut acc = Acc::new();
            for (f, t) in ts.iter().enumerate() {
                let (ps, pa, q1, q2) = fz.eval(t);
                let n = xi_e_from_t(t, h);
                let n2 = n * n;
                let den = n2 * n2 + tau * tau * n2 + tau.powi(4);
                let q = q1 + q2;
                let val = (ps * ps + pa * pa + c0 * q) / den;
                r[f] = val;
                if val < acc.min_r || (val == acc.min_r && (xi_idx, f) < acc.key) {
                    acc.min_r = val;
                    acc.key = (xi_idx, f);
                }
                let xi_e = DVector::from_iterator(t.len(), t.iter().map(|x| x / h));
                let dist = char_distance_e(&xi_e, &fz.g, d);
                let region = classify(n, dist, kappa, gamma0, tau);
                let (ri, partial) = match region {
                    Region::HighFrequency => {
                        acc.c_hf = acc.c_hf.min(ps * ps / den);
                        (0, ps * ps / den)
                    }
                    Region::NearCharacteristic => (1, c0 * q / den),
                    Region::LowFrequencyFar => (2, (ps * ps + pa * pa) / den),
                };
                if region != Region::HighFrequency {
                    acc.k_small = acc.k_small.max((ps - (rho2 - n2)).abs() / delta2);
                }
                acc.region_count[ri] += 1;
                acc.region_min[ri] = acc.region_min[ri].min(val);
                acc.region_partial[ri] = acc.region_partial[ri].min(partial);
            }
            // Local slope from axis neighbours on the periodic grid.
            for f in 0..m {
                let mut g2 = 0.0;
                for &s in &strides {
                    let coord = (f / s) % grid;
                    let up = if coord + 1 == grid { f + s - grid * s } else { f + s };
                    let dn = if coord == 0 { f + grid * s - s } else { f - s };
                    let slope = (r[up] - r[f]).abs().max((r[dn] - r[f]).abs()) / cell;
                    g2 += slope * slope;
                }
                let lip = g2.sqrt();
                acc.lip = acc.lip.max(lip);
                let disc = r[f] - lip * half_diag;
                acc.min_disc = acc.min_disc.min(disc);
                if disc > floor.max(0.5 * r[f]) {
                    acc.certified = acc.certified.min(disc);
                } else {
                    refine_cell(&r_at, &grid_point(f, grid, d), cell, floor, &mut acc);
                }
            }
            acc
        })
        .reduce(Acc::new, Acc::merge);

    let regions = [Region::HighFrequency, Region::NearCharacteristic, Region::LowFrequencyFar]
        .iter()
        .enumerate()
        .map(|(i, &region)| RegionSummary {
            region,
            points: acc.region_count[i],
            min_r: (acc.region_count[i] > 0).then_some(acc.region_min[i]),
            min_partial: (acc.region_count[i] > 0).then_some(acc.region_partial[i]),
        })
        .collect();
    let k2 = kappa * kappa;
    Ok(CertificationReport {
        h,
        tau,
        c0,
        gamma0,
        grid,
        xbar_points: xbars.len(),
        constants: consts,
        c_hf: acc.c_hf.is_finite().then_some(acc.c_hf),
        c_hf_implied: consts.c1 * consts.c1 / 4.0 / (1.0 + 1.0 / k2 + 1.0 / (k2 * k2)),
        k_small_frequency: acc.k_small,
        min_r: acc.min_r,
        argmin_xbar: xbars[acc.key.0].clone(),
        argmin_theta: grid_point(acc.key.1, grid, d),
        lipschitz_max: acc.lip,
        min_r_discounted: acc.min_disc,
        certified_lower_bound: acc.certified,
        refined_cells: acc.refined,
        max_depth: acc.depth,
        regions,
        floor,
        pass: acc.certified > floor,
    })
}

/// Deepest bisection level for cells that fail the base-grid discount.
pub const MAX_REFINE_DEPTH: usize = 10;

/// Bisects the cube of side `side` centred at `center` until every leaf has `R(c) - L(c) r` above both
/// the floor and `R(c) / 2`,
/// where `L(c)` is the finite-difference slope at the leaf scale. Stops early on a grid value at or below the floor.
fn refine_cell(r_at: &impl Fn(&[f64]) -> f64, center: &[f64], side: f64, floor: f64, acc: &mut Acc) {
    let d = center.len();
    let mut stack = vec![(center.to_vec(), side, 0usize)];
    let mut probe = vec![0.0; d];
    while let Some((c, s, depth)) = stack.pop() {
        if depth == MAX_REFINE_DEPTH {
            // Unresolved: keep the best available bound for this cell.
            let (disc, _) = leaf_bound(r_at, &c, s, &mut probe);
            acc.certified = acc.certified.min(disc);
            continue;
        }
        let half = s / 2.0;
        for corner in 0..(1usize << d) {
            let sub: Vec<f64> =
                (0..d).map(|i| c[i] + if corner >> i & 1 == 1 { half / 2.0 } else { -half / 2.0 }).collect();
            let (disc, value) = leaf_bound(r_at, &sub, half, &mut probe);
            acc.refined += 1;
            acc.depth = acc.depth.max(depth + 1);
            if value <= floor {
                acc.certified = acc.certified.min(value);
            } else if disc > floor.max(0.5 * value) {
                acc.certified = acc.certified.min(disc);
            } else {
                stack.push((sub, half, depth + 1));
            }
        }
    }
}

/// `(R(c) - L r, R(c))` for the cube of side `s` centred at `c`, with `L` from differences at step `s`.
fn leaf_bound(r_at: &impl Fn(&[f64]) -> f64, c: &[f64], s: f64, probe: &mut [f64]) -> (f64, f64) {
    let d = c.len();
    let v = r_at(c);
    let mut g2 = 0.0;
    probe.copy_from_slice(c);
    for i in 0..d {
        probe[i] = c[i] + s;
        let up = r_at(probe);
        probe[i] = c[i] - s;
        let dn = r_at(probe);
        probe[i] = c[i];
        let slope = (up - v).abs().max((dn - v).abs()) / s;
        g2 += slope * slope;
    }
    (v - g2.sqrt() * (d as f64).sqrt() * s / 2.0, v)
}

/// Certification over the configured sweep of `c0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub runs: Vec<CertificationReport>,
    /// The `c0` with the largest certified lower bound among passing runs.
    pub best_c0: Option<f64>,
    pub pass: bool,
}

pub fn certify_sweep(
    graph: &OnePointGraph,
    config: &ConstantsConfig,
    h: f64,
    tau: f64,
    xbars: &[Vec<f64>],
    grid: usize,
) -> Result<SweepReport> {
    let mut runs = Vec::new();
    for &c0 in &config.c0_sweep {
        let cfg = ConstantsConfig { c0, ..config.clone() };
        runs.push(certify_lower_bound(graph, &cfg, h, tau, xbars, grid)?);
    }
    let best = runs
        .iter()
        .filter(|r| r.pass)
        .max_by(|a, b| a.certified_lower_bound.total_cmp(&b.certified_lower_bound))
        .map(|r| r.c0);
    Ok(SweepReport { pass: best.is_some(), best_c0: best, runs })
}

/// One sample of the symbol ratio `R` on the frequency grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RFieldPoint {
    pub theta: Vec<f64>,
    pub xi_e_norm: f64,
    pub r: f64,
    pub region: Region,
}

/// `R` over the `grid^d` dual-coordinate grid at a single base point, in grid order.
pub fn r_field(
    graph: &OnePointGraph,
    config: &ConstantsConfig,
    h: f64,
    tau: f64,
    xbar: &[f64],
    grid: usize,
    kappa: f64,
) -> Result<Vec<RFieldPoint>> {
    config.check_tau(tau, h)?;
    let w = CarlemanWeight::new(config.c, tau)?;
    let d = graph.dim();
    let m = grid_len(grid, d)?;
    let fz = Frozen::new(&w, graph, xbar, h)?;
    Ok((0..m)
        .map(|f| {
            let theta = grid_point(f, grid, d);
            let t = t_from_theta(graph, &theta);
            let (ps, pa, q1, q2) = fz.eval(&t);
            let n = xi_e_from_t(&t, h);
            let n2 = n * n;
            let r = (ps * ps + pa * pa + config.c0 * (q1 + q2)) / (n2 * n2 + tau * tau * n2 + tau.powi(4));
            let xi_e = DVector::from_iterator(t.len(), t.iter().map(|x| x / h));
            let region = classify(n, char_distance_e(&xi_e, &fz.g, d), kappa, config.gamma0, tau);
            RFieldPoint { theta, xi_e_norm: n, r, region }
        })
        .collect())
}
