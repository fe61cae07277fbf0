//! Resolved experiment configuration, embedded verbatim in every report.

use std::path::PathBuf;
use std::str::FromStr;

use lattice_ucp::carleman::ConstantsConfig;
use lattice_ucp::graph_core::{preset, GraphSpec, Preset};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable overriding the vertex budget of every window.
pub const VERTEX_BUDGET_ENV: &str = "LATTICE_UCP_VERTEX_BUDGET";

/// Where the graph comes from: a preset name or a TOML spec file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    Preset(String),
    Spec(PathBuf),
}

impl GraphSource {
    pub fn load(&self) -> Result<Preset, CliError> {
        match self {
            GraphSource::Preset(name) => Ok(preset(name)?),
            GraphSource::Spec(path) => Ok(GraphSpec::from_path(path)?.build()?),
        }
    }
}

/// Mesh size kept as an exact rational; converted to `f64` once, by [`MeshSize::value`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeshSize(pub Ratio<i64>);

impl MeshSize {
    pub fn value(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl FromStr for MeshSize {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let r: Ratio<i64> = s
            .trim()
            .parse()
            .map_err(|_| CliError::op(format!("mesh size {s:?} is not a rational such as 1/32")))?;
        if *r.numer() <= 0 {
            return Err(CliError::op(format!("mesh size {s} must be positive")));
        }
        Ok(MeshSize(r))
    }
}

impl std::fmt::Display for MeshSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for MeshSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MeshSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|e: CliError| serde::de::Error::custom(e.to_string()))
    }
}

/// Parses a comma-separated list such as `1/8,1/16`.
pub fn parse_h_list(s: &str) -> Result<Vec<MeshSize>, CliError> {
    let out: Vec<MeshSize> = s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(CliError::op("empty mesh size list"));
    }
    Ok(out)
}

/// `tau` as a fraction of `delta0 / h` or as an absolute value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    Fraction(f64),
    Absolute(f64),
}

impl TauRule {
    pub fn tau(&self, constants: &ConstantsConfig, h: f64) -> f64 {
        match *self {
            TauRule::Fraction(f) => f * constants.delta0 / h,
            TauRule::Absolute(t) => t,
        }
    }
}

impl FromStr for TauRule {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::op(format!("tau rule {s:?} must be frac:<f> or abs:<tau>"));
        let (kind, val) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = val.trim().parse().map_err(|_| bad())?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(bad());
        }
        match kind.trim() {
            "frac" => Ok(TauRule::Fraction(v)),
            "abs" => Ok(TauRule::Absolute(v)),
            _ => Err(bad()),
        }
    }
}

/// On-site potential: `zero`, `const:a`, `uniform:M`, `radial:M` or `csv:path`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Constant(f64),
    Uniform(f64),
    Radial(f64),
    Csv(PathBuf),
}

impl FromStr for PotentialSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::op(format!("potential {s:?} must be zero, const:a, uniform:M, radial:M or csv:path"));
        if s.trim() == "zero" {
            return Ok(PotentialSpec::Zero);
        }
        let (kind, val) = s.split_once(':').ok_or_else(bad)?;
        if kind == "csv" {
            return Ok(PotentialSpec::Csv(PathBuf::from(val)));
        }
        let v: f64 = val.trim().parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        match kind.trim() {
            "const" => Ok(PotentialSpec::Constant(v)),
            "uniform" if v >= 0.0 => Ok(PotentialSpec::Uniform(v)),
            "radial" if v >= 0.0 => Ok(PotentialSpec::Radial(v)),
            _ => Err(bad()),
        }
    }
}

/// Command-specific parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Solve {
        radius: f64,
        potential: PotentialSpec,
    },
    CarlemanTest {
        tau_rule: TauRule,
        modes: usize,
        sup_iterations: usize,
        pseudoconvexity_tau: Vec<f64>,
    },
    SymbolCertify {
        tau_rule: TauRule,
        r_field: bool,
    },
    ThreeBalls {
        radius: f64,
        potential: PotentialSpec,
        tau_points: usize,
        extremal: bool,
        extremal_radius: f64,
        vanish_radius: f64,
    },
    Caccioppoli {
        radius: f64,
        r1: f64,
        r2: f64,
        potential: PotentialSpec,
        magnetic_bound: f64,
    },
    Reduce {
        radius: f64,
        potential: PotentialSpec,
        check: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Solve { .. } => "solve",
            Command::CarlemanTest { .. } => "carleman-test",
            Command::SymbolCertify { .. } => "symbol-certify",
            Command::ThreeBalls { .. } => "three-balls",
            Command::Caccioppoli { .. } => "caccioppoli",
            Command::Reduce { .. } => "reduce",
        }
    }
}

/// Everything that determines the output of a run. The output directory and worker
/// count are excluded: neither changes a single byte of the reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub graph: GraphSource,
    pub h_list: Vec<MeshSize>,
    pub constants: ConstantsConfig,
    pub ensemble: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.constants.validate()?;
        if !matches!(self.command, Command::Validate) {
            for h in &self.h_list {
                if h.value() > self.constants.h0 {
                    return Err(CliError::op(format!("h = {h} exceeds h0 = {}", self.constants.h0)));
                }
            }
        }
        Ok(())
    }

    pub fn h_values(&self) -> Vec<f64> {
        self.h_list.iter().map(MeshSize::value).collect()
    }
}

/// Vertex budget from the environment, or the library default.
pub fn vertex_budget() -> Result<usize, CliError> {
    match std::env::var(VERTEX_BUDGET_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::op(format!("{VERTEX_BUDGET_ENV}={s:?} is not a vertex count"))),
        Err(_) => Ok(lattice_ucp::graph_core::DEFAULT_VERTEX_BUDGET),
    }
}
