//! TOML graph description files.
//!
//! ```toml
//! name = "hexagonal"
//! dimension = 2
//! kind = "hexagonal_type"
//! basis = [[1.5, 0.8660254037844386], [0.0, 1.7320508075688772]]
//! points = [[0.0, 0.0], [1.0, 0.0]]
//! edges = [{ from = 1, to = 2, shift = [0, 0] }, { from = 2, to = 1, shift = [0, 0] }]
//! ```
//!
//! Classes are numbered from 1 in files. For one-point graphs `edges` is a list
//! of generator vectors in Cartesian coordinates and `points` may be omitted.

use serde::{Deserialize, Serialize};

use super::{EdgeRule, GraphKind, LatticeBasis, MultiPointGraph, OnePointGraph, Preset};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub from: usize,
    pub to: usize,
    pub shift: Vec<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum EdgeSpec {
    Rules(Vec<RuleSpec>),
    Generators(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub basis: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    pub edges: EdgeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<GraphKind>,
}

impl GraphSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: GraphSpec = toml::from_str(text).map_err(|e| Error::input(format!("malformed graph spec: {e}")))?;
        if spec.basis.len() != spec.dimension {
            return Err(Error::input(format!(
                "basis has {} vectors but dimension is {}",
                spec.basis.len(),
                spec.dimension
            )));
        }
        Ok(spec)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::input(format!("cannot read graph spec {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("graph spec serializes")
    }

    fn name_or_default(&self) -> String {
        self.name.clone().unwrap_or_else(|| "custom".to_string())
    }

    /// Builds the graph as a periodic graph without requiring the generators to span.
    pub fn build_periodic(&self) -> Result<MultiPointGraph> {
        let basis = LatticeBasis::new(self.basis.clone())?;
        match &self.edges {
            EdgeSpec::Generators(gens) => {
                let mut coords = Vec::with_capacity(gens.len());
                for (j, e) in gens.iter().enumerate() {
                    if e.len() != self.dimension {
                        return Err(Error::input(format!("generator {} has wrong length", j + 1)));
                    }
                    coords.push(
                        basis
                            .integer_coords(e)
                            .ok_or_else(|| Error::input(format!("generator {} is not a lattice vector", j + 1)))?,
                    );
                }
                let mut g = MultiPointGraph::from_generators(self.name_or_default(), basis, &coords)?;
                if let Some(k) = self.kind {
                    g.set_kind(k);
                }
                Ok(g)
            }
            EdgeSpec::Rules(rules) => {
                let points = self
                    .points
                    .clone()
                    .ok_or_else(|| Error::input("multi-point graph spec needs 'points'"))?;
                let mut out = Vec::with_capacity(rules.len());
                for r in rules {
                    if r.from == 0 || r.to == 0 {
                        return Err(Error::input("edge classes are numbered from 1"));
                    }
                    out.push(EdgeRule::new(r.from - 1, r.to - 1, r.shift.clone()));
                }
                MultiPointGraph::new(self.name_or_default(), basis, points, out, self.kind.unwrap_or(GraphKind::General))
            }
        }
    }

    /// Builds a one-point graph when the edges are generators, otherwise a multi-point graph.
    pub fn build(&self) -> Result<Preset> {
        match &self.edges {
            EdgeSpec::Generators(gens) if self.points.as_ref().is_none_or(|p| p.len() <= 1) => {
                let basis = LatticeBasis::new(self.basis.clone())?;
                Ok(Preset::OnePoint(OnePointGraph::new(self.name_or_default(), basis, gens.clone())?))
            }
            _ => Ok(Preset::MultiPoint(self.build_periodic()?)),
        }
    }

    pub fn from_one_point(g: &OnePointGraph) -> Self {
        GraphSpec {
            name: Some(g.name.clone()),
            dimension: g.dim(),
            basis: g.basis().vectors().to_vec(),
            points: None,
            edges: EdgeSpec::Generators(g.generators().iter().map(|e| e.iter().copied().collect()).collect()),
            kind: None,
        }
    }

    pub fn from_multi_point(g: &MultiPointGraph) -> Self {
        GraphSpec {
            name: Some(g.name.clone()),
            dimension: g.dim(),
            basis: g.basis().vectors().to_vec(),
            points: Some(g.points().to_vec()),
            edges: EdgeSpec::Rules(
                g.rules()
                    .iter()
                    .map(|r| RuleSpec { from: r.from + 1, to: r.to + 1, shift: r.shift.clone() })
                    .collect(),
            ),
            kind: Some(g.kind()),
        }
    }
}
