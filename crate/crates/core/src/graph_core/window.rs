use super::MultiPointGraph;
use crate::{Error, Result};

/// Vertex budget used when none is given explicitly.
pub const DEFAULT_VERTEX_BUDGET: usize = 4_000_000;

const ABSENT: u32 = u32::MAX;

/// Closed-ball membership with a small relative slack so that points exactly on
/// the sphere are counted as inside.
pub fn in_ball(norm: f64, r: f64) -> bool {
    norm <= r + 1e-12 * r.max(1.0)
}

/// Vertices of `h * V` with Gamma-norm at most `radius`, ordered lexicographically on `(n, class)`.
#[derive(Clone, Debug)]
pub struct VertexWindow {
    dim: usize,
    classes_count: usize,
    pub h: f64,
    pub radius: f64,
    pub collar: usize,
    indices: Vec<i64>,
    classes: Vec<usize>,
    positions: Vec<f64>,
    norms: Vec<f64>,
    box_half: i64,
    box_side: usize,
    lookup: Vec<u32>,
    adj_start: Vec<usize>,
    adj: Vec<u32>,
    adj_rule: Vec<u32>,
    interior: Vec<bool>,
}

pub fn enumerate_window(graph: &MultiPointGraph, h: f64, radius: f64, collar: usize) -> Result<VertexWindow> {
    enumerate_window_with_budget(graph, h, radius, collar, DEFAULT_VERTEX_BUDGET)
}

pub fn enumerate_window_with_budget(
    graph: &MultiPointGraph,
    h: f64,
    radius: f64,
    collar: usize,
    budget: usize,
) -> Result<VertexWindow> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::input(format!("mesh size must be positive, got {h}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::input(format!("window radius must be positive, got {radius}")));
    }
    let metric = graph
        .metric()
        .ok_or_else(|| Error::input("graph has no Gram metric (edges do not span)"))?;
    let d = graph.dim();
    let s = graph.num_classes();
    // |x|_Gamma <= R implies ||x||_2 <= R sqrt(lambda_max(G)); map back to lattice indices.
    let lam_max = metric.gram.clone().symmetric_eigenvalues().max();
    let max_point = graph
        .points()
        .iter()
        .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let bound = graph.basis().inverse_norm() * (radius * lam_max.sqrt() / h + max_point);
    let box_half = bound.ceil() as i64 + 1;
    let box_side = (2 * box_half + 1) as usize;
    let cells = box_side
        .checked_pow(d as u32)
        .and_then(|c| c.checked_mul(s))
        .ok_or(Error::Resource { required: usize::MAX, budget })?;
    let est = (cells as f64 * volume_fraction(d)) as usize;
    if est > budget.saturating_mul(4) || cells > (1usize << 30) {
        return Err(Error::Resource { required: est.max(budget + 1), budget });
    }

    let basis = graph.basis().matrix();
    let mut indices = Vec::new();
    let mut classes = Vec::new();
    let mut positions = Vec::new();
    let mut norms = Vec::new();
    let mut lookup = vec![ABSENT; cells];
    let mut n = vec![-box_half; d];
    let mut x = vec![0.0; d];
    let mut count = 0usize;
    'scan: loop {
        for (class, p) in graph.points().iter().enumerate() {
            for i in 0..d {
                let mut v = p[i];
                for l in 0..d {
                    v += basis[(i, l)] * n[l] as f64;
                }
                x[i] = h * v;
            }
            let nm = metric.norm(&x);
            if in_ball(nm, radius) {
                count += 1;
                if count > budget {
                    // Keep counting so the error reports the full requirement.
                    continue;
                }
                let cell = cell_index(&n, class, box_half, box_side, s);
                lookup[cell] = (count - 1) as u32;
                indices.extend_from_slice(&n);
                classes.push(class);
                positions.extend_from_slice(&x);
                norms.push(nm);
            }
        }
        // Lexicographic increment with the last coordinate fastest.
        let mut l = d;
        loop {
            if l == 0 {
                break 'scan;
            }
            l -= 1;
            n[l] += 1;
            if n[l] <= box_half {
                break;
            }
            n[l] = -box_half;
        }
    }
    if count > budget {
        return Err(Error::Resource { required: count, budget });
    }

    let mut w = VertexWindow {
        dim: d,
        classes_count: s,
        h,
        radius,
        collar,
        indices,
        classes,
        positions,
        norms,
        box_half,
        box_side,
        lookup,
        adj_start: Vec::with_capacity(count + 1),
        adj: Vec::new(),
        adj_rule: Vec::new(),
        interior: Vec::new(),
    };
    let mut target = vec![0i64; d];
    w.adj_start.push(0);
    for v in 0..count {
        let class = w.classes[v];
        for (ri, r) in graph.rules().iter().enumerate() {
            if r.from != class {
                continue;
            }
            for i in 0..d {
                target[i] = w.indices[v * d + i] + r.shift[i];
            }
            w.adj.push(w.find(&target, r.to).map_or(ABSENT, |o| o as u32));
            w.adj_rule.push(ri as u32);
        }
        w.adj_start.push(w.adj.len());
    }
    // Depth-c interior: every neighbor exists and is interior at depth c-1.
    let mut interior = vec![true; count];
    for _ in 0..collar {
        let prev = interior.clone();
        for v in 0..count {
            interior[v] = w.adj[w.adj_start[v]..w.adj_start[v + 1]]
                .iter()
                .all(|&a| a != ABSENT && prev[a as usize]);
        }
    }
    w.interior = interior;
    Ok(w)
}

fn volume_fraction(d: usize) -> f64 {
    // Volume of the unit ball over the volume of the cube [-1,1]^d.
    match d {
        1 => 1.0,
        2 => std::f64::consts::PI / 4.0,
        3 => std::f64::consts::PI / 6.0,
        _ => 0.1,
    }
}

fn cell_index(n: &[i64], class: usize, half: i64, side: usize, s: usize) -> usize {
    let mut c = 0usize;
    for &x in n {
        c = c * side + (x + half) as usize;
    }
    c * s + class
}

impl VertexWindow {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.classes_count
    }

    pub fn index(&self, v: usize) -> &[i64] {
        &self.indices[v * self.dim..(v + 1) * self.dim]
    }

    pub fn class(&self, v: usize) -> usize {
        self.classes[v]
    }

    pub fn position(&self, v: usize) -> &[f64] {
        &self.positions[v * self.dim..(v + 1) * self.dim]
    }

    /// Gamma-norm of the vertex position.
    pub fn norm(&self, v: usize) -> f64 {
        self.norms[v]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.interior[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        !self.interior[v]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        self.interior.iter().map(|b| !b).collect()
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.interior[v]).collect()
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| !self.interior[v]).collect()
    }

    /// Ordinal of `(n, class)` if present.
    pub fn find(&self, n: &[i64], class: usize) -> Option<usize> {
        if class >= self.classes_count || n.len() != self.dim {
            return None;
        }
        if n.iter().any(|&x| x.abs() > self.box_half) {
            return None;
        }
        let o = self.lookup[cell_index(n, class, self.box_half, self.box_side, self.classes_count)];
        (o != ABSENT).then_some(o as usize)
    }

    /// Ordinal of the vertex `index(v) + shift` in `class`.
    pub fn shifted(&self, v: usize, shift: &[i64], class: usize) -> Option<usize> {
        let mut t = [0i64; 8];
        let d = self.dim;
        if d > t.len() {
            let t: Vec<i64> = self.index(v).iter().zip(shift).map(|(a, b)| a + b).collect();
            return self.find(&t, class);
        }
        for i in 0..d {
            t[i] = self.indices[v * d + i] + shift[i];
        }
        self.find(&t[..d], class)
    }

    /// Neighbors of `v` as `(rule index, ordinal)`; missing neighbors have ordinal `None`.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, Option<usize>)> + '_ {
        let range = self.adj_start[v]..self.adj_start[v + 1];
        self.adj[range.clone()]
            .iter()
            .zip(&self.adj_rule[range])
            .map(|(&a, &r)| (r as usize, (a != ABSENT).then_some(a as usize)))
    }

    /// Neighbor along rule slot `slot` of the vertex's own rule list.
    pub fn neighbor_slot(&self, v: usize, slot: usize) -> Option<usize> {
        let a = self.adj[self.adj_start[v] + slot];
        (a != ABSENT).then_some(a as usize)
    }

    /// Vertices with Gamma-norm at most `r`.
    pub fn ball(&self, r: f64) -> Vec<usize> {
        (0..self.len()).filter(|&v| in_ball(self.norms[v], r)).collect()
    }

    pub fn ball_mask(&self, r: f64) -> Vec<bool> {
        self.norms.iter().map(|&n| in_ball(n, r)).collect()
    }
}
