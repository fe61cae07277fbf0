//! Command-line flags and their translation into an [`ExperimentConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lattice_ucp::carleman::ConstantsConfig;

use crate::config::{parse_h_list, Command, ExperimentConfig, GraphSource, PotentialSpec, TauRule};
use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "lattice-ucp", version, about = "Sweeps and reports for discrete Schrodinger operators on periodic graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Preset graph name
    #[arg(long, conflicts_with = "spec")]
    pub graph: Option<String>,
    /// TOML graph spec file
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Mesh sizes as rationals, e.g. 1/8,1/16
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ensemble size
    #[arg(long)]
    pub ensemble: Option<usize>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// TOML file of constants
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "lattice_ucp_out")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// Check graph invariants and classify the graph
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Solve H_h u = 0 with seeded boundary data and export u
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4.0)]
        radius: f64,
        /// zero, const:a, uniform:M, radial:M or csv:path
        #[arg(long, default_value = "zero")]
        potential: String,
    },
    /// Carleman ratios of seeded annulus bumps, optionally with pseudoconvexity grids
    CarlemanTest {
        #[command(flatten)]
        common: Common,
        /// frac:f for tau = f delta0 / h, or abs:tau
        #[arg(long, default_value = "frac:0.5")]
        tau: String,
        /// Override the weight parameter c
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 8)]
        modes: usize,
        /// Subspace iterations for the supremum estimate; 0 skips it
        #[arg(long, default_value_t = 0)]
        sup_iterations: usize,
        /// tau values for the pseudoconvexity grid, e.g. 1,4,16
        #[arg(long)]
        pseudoconvexity_tau: Option<String>,
    },
    /// Grid certification of the symbol lower bound
    SymbolCertify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "frac:0.5")]
        tau: String,
        /// Frequency grid points per dual coordinate
        #[arg(long)]
        grid: Option<usize>,
        /// Comma-separated c0 sweep
        #[arg(long)]
        c0: Option<String>,
        /// Floor the certified bound must exceed
        #[arg(long)]
        floor: Option<f64>,
        /// Also dump the R field at the minimising base point
        #[arg(long)]
        r_field: bool,
    },
    /// Empirical three-balls constants and extremal vanishing ratios
    ThreeBalls {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4.0)]
        radius: f64,
        #[arg(long, default_value = "zero")]
        potential: String,
        #[arg(long, default_value_t = 64)]
        tau_points: usize,
        /// Skip the extremal vanishing ratio
        #[arg(long)]
        no_extremal: bool,
        #[arg(long, default_value_t = 2.0)]
        extremal_radius: f64,
    },
    /// Caccioppoli ratios over a solution ensemble
    Caccioppoli {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.5)]
        r1: f64,
        #[arg(long, default_value_t = 3.7)]
        r2: f64,
        #[arg(long, default_value = "zero")]
        potential: String,
        /// Bound of the seeded magnetic fields
        #[arg(long, default_value_t = 0.0)]
        magnetic: f64,
    },
    /// Reduce a hexagonal-type or star graph to its one-point graph
    Reduce {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        #[arg(long, default_value = "zero")]
        potential: String,
        /// Number of seeded consistency solves
        #[arg(long, default_value_t = 0)]
        check: usize,
    },
    /// Rerun the configuration embedded in a JSON report
    Replay {
        report: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value = "lattice_ucp_out")]
        out: PathBuf,
    },
}

/// Resolved configuration plus the plumbing that does not affect outputs.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub config: ExperimentConfig,
    pub workers: usize,
    pub out: PathBuf,
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::op(format!("{p:?} is not a number"))))
        .collect()
}

fn constants(path: &Option<PathBuf>) -> Result<ConstantsConfig, CliError> {
    match path {
        None => Ok(ConstantsConfig::default()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::op(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::op(format!("config {}: {}", p.display(), e.message())))
        }
    }
}

fn graph(common: &Common, default: &str) -> GraphSource {
    match (&common.graph, &common.spec) {
        (_, Some(p)) => GraphSource::Spec(p.clone()),
        (Some(g), None) => GraphSource::Preset(g.clone()),
        (None, None) => GraphSource::Preset(default.to_string()),
    }
}

fn build(common: &Common, command: Command, default_h: &str, default_ensemble: usize, default_graph: &str, constants: ConstantsConfig) -> Result<Invocation, CliError> {
    let config = ExperimentConfig {
        command,
        graph: graph(common, default_graph),
        h_list: parse_h_list(common.h.as_deref().unwrap_or(default_h))?,
        constants,
        ensemble: common.ensemble.unwrap_or(default_ensemble),
        seed: common.seed,
    };
    if common.workers == 0 {
        return Err(CliError::op("--workers must be at least 1"));
    }
    Ok(Invocation { config, workers: common.workers, out: common.out.clone() })
}

impl Sub {
    pub fn into_invocation(self) -> Result<Invocation, CliError> {
        match self {
            Sub::Validate { common } => {
                let k = constants(&common.config)?;
                build(&common, Command::Validate, "1/8", 0, "square2d", k)
            }
            Sub::Solve { common, radius, potential } => {
                let k = constants(&common.config)?;
                let cmd = Command::Solve { radius, potential: potential.parse::<PotentialSpec>()? };
                build(&common, cmd, "1/16", 1, "square2d", k)
            }
            Sub::CarlemanTest { common, tau, c, modes, sup_iterations, pseudoconvexity_tau } => {
                let mut k = constants(&common.config)?;
                if let Some(c) = c {
                    k.c = c;
                }
                let cmd = Command::CarlemanTest {
                    tau_rule: tau.parse::<TauRule>()?,
                    modes,
                    sup_iterations,
                    pseudoconvexity_tau: pseudoconvexity_tau.as_deref().map(parse_f64_list).transpose()?.unwrap_or_default(),
                };
                build(&common, cmd, "1/16,1/32,1/64", 100, "square2d", k)
            }
            Sub::SymbolCertify { common, tau, grid, c0, floor, r_field } => {
                let mut k = constants(&common.config)?;
                if let Some(g) = grid {
                    k.xi_grid = g;
                }
                if let Some(c0) = c0 {
                    k.c0_sweep = parse_f64_list(&c0)?;
                }
                if let Some(f) = floor {
                    k.symbol_floor = f;
                }
                let cmd = Command::SymbolCertify { tau_rule: tau.parse::<TauRule>()?, r_field };
                build(&common, cmd, "1/32", 0, "square2d", k)
            }
            Sub::ThreeBalls { common, radius, potential, tau_points, no_extremal, extremal_radius } => {
                let k = constants(&common.config)?;
                let cmd = Command::ThreeBalls {
                    radius,
                    potential: potential.parse::<PotentialSpec>()?,
                    tau_points,
                    extremal: !no_extremal,
                    extremal_radius,
                    vanish_radius: 0.5,
                };
                build(&common, cmd, "1/8,1/16,1/32,1/64", 200, "square2d", k)
            }
            Sub::Caccioppoli { common, radius, r1, r2, potential, magnetic } => {
                let k = constants(&common.config)?;
                let cmd =
                    Command::Caccioppoli { radius, r1, r2, potential: potential.parse::<PotentialSpec>()?, magnetic_bound: magnetic };
                build(&common, cmd, "1/32,1/64", 100, "square2d", k)
            }
            Sub::Reduce { common, radius, potential, check } => {
                let k = constants(&common.config)?;
                let cmd = Command::Reduce { radius, potential: potential.parse::<PotentialSpec>()?, check };
                build(&common, cmd, "1/16", 0, "hexagonal", k)
            }
            Sub::Replay { report, workers, out } => {
                let text = std::fs::read_to_string(&report)
                    .map_err(|e| CliError::op(format!("cannot read {}: {e}", report.display())))?;
                let v: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| CliError::op(format!("report {}: {e}", report.display())))?;
                let config: ExperimentConfig = serde_json::from_value(v["config"].clone())
                    .map_err(|e| CliError::op(format!("report {} has no usable config: {e}", report.display())))?;
                if workers == 0 {
                    return Err(CliError::op("--workers must be at least 1"));
                }
                Ok(Invocation { config, workers, out })
            }
        }
    }
}
