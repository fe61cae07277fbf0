//! Command-line orchestration for `lattice-ucp`: presets, sweeps over mesh sizes,
//! JSON and CSV reports, and exit codes that separate falsification from failure.

pub mod args;
pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

pub use args::{Cli, Invocation};
pub use commands::run_command;
pub use config::ExperimentConfig;
pub use report::{Output, Status};

/// Operational failure: bad input, unreadable files, solver breakdown, budget exceeded.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError(pub String);

impl CliError {
    pub fn op(msg: impl Into<String>) -> Self {
        CliError(msg.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<lattice_ucp::Error> for CliError {
    fn from(e: lattice_ucp::Error) -> Self {
        CliError(e.to_string())
    }
}

/// Runs the experiment on a pool of `workers` threads. Workers fan out sweep points;
/// linear algebra kernels stay sequential so outputs do not depend on the pool size.
pub fn run_with_workers(config: &ExperimentConfig, workers: usize) -> Result<Output, CliError> {
    lattice_ucp::linalg::pin_sequential_kernels();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::op(format!("thread pool: {e}")))?;
    pool.install(|| run_command(config))
}

/// Runs an invocation, writes its files and returns the paths and the output.
/// Wall time goes to `timing.json`, outside the byte-reproducible report.
pub fn execute(inv: &Invocation) -> Result<(Output, Vec<PathBuf>), CliError> {
    let start = Instant::now();
    let out = run_with_workers(&inv.config, inv.workers)?;
    let mut paths = out.write(&inv.config, &inv.out)?;
    let timing = serde_json::json!({
        "command": inv.config.command.name(),
        "wall_seconds": start.elapsed().as_secs_f64(),
        "workers": inv.workers,
    });
    let p = inv.out.join("timing.json");
    std::fs::write(&p, format!("{timing:#}\n")).map_err(|e| CliError::op(format!("cannot write {}: {e}", p.display())))?;
    paths.push(p);
    Ok((out, paths))
}

/// Parses arguments, runs, prints a summary and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = cli.command.into_invocation().and_then(|inv| execute(&inv));
    match result {
        Ok((out, paths)) => {
            for line in &out.summary {
                println!("{line}");
            }
            for p in &paths {
                println!("wrote {}", p.display());
            }
            println!("status: {}", serde_json::to_value(out.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
            out.status.exit_code()
        }
        Err(e) => {
            eprintln!("error: {}", e.0.replace('\n', " "));
            1
        }
    }
}
