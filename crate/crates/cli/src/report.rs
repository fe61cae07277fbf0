//! Report envelope and file emission.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Required stability factor across mesh sizes.
pub const STABILITY_FACTOR: f64 = 2.0;

/// Version of the JSON envelope and of every CSV header set.
pub const SCHEMA_VERSION: u32 = 1;

/// Verdict of a run. `Inconclusive` means a target was missed without any inequality
/// instance being violated; it exits 0 like `Pass`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Inconclusive,
    Falsified,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass | Status::Inconclusive => 0,
            Status::Falsified => 2,
        }
    }

    pub fn worst(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Falsified, _) | (_, Falsified) => Falsified,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: u32,
    command: &'a str,
    library_version: &'a str,
    cli_version: &'a str,
    config: &'a ExperimentConfig,
    /// Factor taking the one-point graph to canonical units; absent for multi-point graphs.
    rescale_sigma: Option<f64>,
    status: Status,
    result: &'a serde_json::Value,
}

/// Result of a command, before anything touches the file system.
#[derive(Debug)]
pub struct Output {
    pub status: Status,
    pub sigma: Option<f64>,
    pub result: serde_json::Value,
    /// Extra files as `(name, bytes)`, written next to the JSON report.
    pub files: Vec<(String, Vec<u8>)>,
    /// Lines for standard output.
    pub summary: Vec<String>,
}

impl Output {
    pub fn report_json(&self, config: &ExperimentConfig) -> Result<Vec<u8>, CliError> {
        let env = Envelope {
            schema_version: SCHEMA_VERSION,
            command: config.command.name(),
            library_version: lattice_ucp::VERSION,
            cli_version: env!("CARGO_PKG_VERSION"),
            config,
            rescale_sigma: self.sigma,
            status: self.status,
            result: &self.result,
        };
        let mut bytes = serde_json::to_vec_pretty(&env).map_err(|e| CliError::op(format!("JSON encoding: {e}")))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// Writes `<command>.json` and the extra files into `dir`; returns the paths written.
    pub fn write(&self, config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::op(format!("cannot create {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(|e| CliError::op(format!("cannot write {}: {e}", p.display())))?;
            written.push(p);
            Ok(())
        };
        put(&format!("{}.json", config.command.name()), &self.report_json(config)?)?;
        for (name, bytes) in &self.files {
            put(name, bytes)?;
        }
        Ok(written)
    }
}

/// Serialises rows under a fixed header taken from the row type.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::op(format!("CSV encoding: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::op(format!("CSV encoding: {e}")))
}

/// Serialises raw string records, header first.
pub fn csv_records(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::op(format!("CSV encoding: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::op(format!("CSV encoding: {e}")))
}

pub fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::op(format!("JSON encoding: {e}")))
}

/// `max / min` over positive finite values; infinite if any value is not, 1 for no values.
pub fn spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return f64::INFINITY;
    }
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Values strictly increasing as `h` decreases, growing by more than the stability factor overall.
pub fn diverges_with_refinement(hs: &[f64], values: &[f64]) -> bool {
    if hs.len() < 3 {
        return false;
    }
    let mut order: Vec<usize> = (0..hs.len()).collect();
    order.sort_by(|&a, &b| hs[b].total_cmp(&hs[a]));
    let v: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    v.windows(2).all(|p| p[1] > p[0]) && v[v.len() - 1] > STABILITY_FACTOR * v[0]
}
