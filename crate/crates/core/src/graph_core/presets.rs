//! Built-in graphs. Multi-point presets use balanced embeddings (every vertex is
//! the barycenter of its neighbors) so that linear functions are harmonic.

use super::{EdgeRule, GraphKind, LatticeBasis, MultiPointGraph, OnePointGraph};
use crate::{Error, Result};

pub const ONE_POINT_PRESETS: &[&str] = &["square2d", "triangular", "fig1c", "chain1d", "cubic3d"];
pub const MULTI_POINT_PRESETS: &[&str] = &["hexagonal", "octagonal", "kagome", "hex_star", "square_subdivision"];

#[derive(Clone, Debug)]
pub enum Preset {
    OnePoint(OnePointGraph),
    MultiPoint(MultiPointGraph),
}

impl Preset {
    pub fn name(&self) -> &str {
        match self {
            Preset::OnePoint(g) => &g.name,
            Preset::MultiPoint(g) => &g.name,
        }
    }

    pub fn periodic(&self) -> &MultiPointGraph {
        match self {
            Preset::OnePoint(g) => g.as_periodic(),
            Preset::MultiPoint(g) => g,
        }
    }

    pub fn one_point(&self) -> Option<&OnePointGraph> {
        match self {
            Preset::OnePoint(g) => Some(g),
            Preset::MultiPoint(_) => None,
        }
    }
}

pub fn preset_names() -> Vec<&'static str> {
    ONE_POINT_PRESETS.iter().chain(MULTI_POINT_PRESETS).copied().collect()
}

fn sym(rules: &[(usize, usize, Vec<i64>)]) -> Vec<EdgeRule> {
    let mut out = Vec::with_capacity(2 * rules.len());
    for (f, t, m) in rules {
        let r = EdgeRule::new(*f, *t, m.clone());
        out.push(r.reversed());
        out.push(r);
    }
    out.sort();
    out.dedup();
    out
}

pub fn preset(name: &str) -> Result<Preset> {
    let s3 = 3f64.sqrt();
    let g = match name {
        "square2d" => Preset::OnePoint(OnePointGraph::from_lattice_coords(
            name,
            LatticeBasis::standard(2),
            vec![vec![1, 0], vec![0, 1]],
        )?),
        "triangular" => Preset::OnePoint(OnePointGraph::from_lattice_coords(
            name,
            LatticeBasis::standard(2),
            vec![vec![1, 0], vec![0, 1], vec![1, -1]],
        )?),
        "fig1c" => Preset::OnePoint(OnePointGraph::from_lattice_coords(
            name,
            LatticeBasis::standard(2),
            vec![vec![1, 0], vec![0, 1], vec![2, 1], vec![1, 2]],
        )?),
        "chain1d" => Preset::OnePoint(OnePointGraph::from_lattice_coords(name, LatticeBasis::standard(1), vec![vec![1]])?),
        "cubic3d" => Preset::OnePoint(OnePointGraph::from_lattice_coords(
            name,
            LatticeBasis::standard(3),
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
        )?),
        "hexagonal" => {
            // Unit bonds at 120 degrees; class 2 sits at (1, 0).
            let basis = LatticeBasis::new(vec![vec![1.5, s3 / 2.0], vec![0.0, s3]])?;
            let rules = sym(&[(0, 1, vec![0, 0]), (0, 1, vec![-1, 1]), (0, 1, vec![-1, 0])]);
            Preset::MultiPoint(MultiPointGraph::new(
                name,
                basis,
                vec![vec![0.0, 0.0], vec![1.0, 0.0]],
                rules,
                GraphKind::HexagonalType,
            )?)
        }
        "hex_star" => {
            // Hexagonal lattice plus bonds between class-1 vertices along the second lattice vector.
            let basis = LatticeBasis::new(vec![vec![1.5, s3 / 2.0], vec![0.0, s3]])?;
            let rules = sym(&[
                (0, 1, vec![0, 0]),
                (0, 1, vec![-1, 1]),
                (0, 1, vec![-1, 0]),
                (0, 0, vec![0, 1]),
            ]);
            Preset::MultiPoint(MultiPointGraph::new(
                name,
                basis,
                vec![vec![0.0, 0.0], vec![1.0, 0.0]],
                rules,
                GraphKind::Star,
            )?)
        }
        "octagonal" => {
            // Truncated square tiling: a diamond of four classes per unit cell.
            let q = 0.25;
            let points = vec![vec![0.0, 0.0], vec![-q, q], vec![-2.0 * q, 0.0], vec![-q, -q]];
            let rules = sym(&[
                (0, 1, vec![0, 0]),
                (1, 2, vec![0, 0]),
                (2, 3, vec![0, 0]),
                (3, 0, vec![0, 0]),
                (0, 2, vec![1, 0]),
                (1, 3, vec![0, 1]),
            ]);
            Preset::MultiPoint(MultiPointGraph::new(name, LatticeBasis::standard(2), points, rules, GraphKind::General)?)
        }
        "kagome" => {
            let basis = LatticeBasis::new(vec![vec![2.0, 0.0], vec![1.0, s3]])?;
            let points = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, s3 / 2.0]];
            let rules = sym(&[
                (0, 1, vec![0, 0]),
                (0, 2, vec![0, 0]),
                (1, 2, vec![0, 0]),
                (1, 0, vec![1, 0]),
                (2, 0, vec![0, 1]),
                (2, 1, vec![-1, 1]),
            ]);
            Preset::MultiPoint(MultiPointGraph::new(name, basis, points, rules, GraphKind::General)?)
        }
        "square_subdivision" => {
            let points = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5]];
            let rules = sym(&[(0, 1, vec![0, 0]), (1, 0, vec![1, 0]), (0, 2, vec![0, 0]), (2, 0, vec![0, 1])]);
            Preset::MultiPoint(MultiPointGraph::new(name, LatticeBasis::standard(2), points, rules, GraphKind::Star)?)
        }
        other => {
            return Err(Error::input(format!(
                "unknown preset '{other}' (known: {})",
                preset_names().join(", ")
            )))
        }
    };
    Ok(g)
}
