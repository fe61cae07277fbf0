use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GridFunction;
use crate::graph_core::VertexWindow;
use crate::{Error, Result};

pub fn constant_potential(window: &VertexWindow, c: f64) -> Result<GridFunction> {
    GridFunction::new(window, vec![c; window.len()])
}

/// `V(x) = m * exp(-|x|_Gamma^2)`.
pub fn radial_potential(window: &VertexWindow, m: f64) -> Result<GridFunction> {
    GridFunction::new(window, window.norms().iter().map(|r| m * (-r * r).exp()).collect())
}

/// Independent uniform values in `[-m, m]` from a seeded ChaCha8 stream.
pub fn uniform_potential(window: &VertexWindow, m: f64, seed: u64) -> Result<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..window.len())
        .map(|_| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 })
        .collect();
    GridFunction::new(window, values)
}

/// Reads a potential from CSV rows `n_1, ..., n_d, class, value` with classes numbered from 1.
/// A header row is optional. Vertices not listed get 0; rows outside the window are ignored.
pub fn potential_from_csv<R: std::io::Read>(window: &VertexWindow, reader: R) -> Result<GridFunction> {
    let d = window.dim();
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut values = vec![0.0; window.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::input(format!("potential CSV: {e}")))?;
        if rec.len() != d + 2 {
            return Err(Error::input(format!(
                "potential CSV line {} has {} columns, expected {}",
                line + 1,
                rec.len(),
                d + 2
            )));
        }
        let ints: std::result::Result<Vec<i64>, _> = rec.iter().take(d + 1).map(str::parse::<i64>).collect();
        let Ok(ints) = ints else {
            if line == 0 {
                continue;
            }
            return Err(Error::input(format!("potential CSV line {}: bad index", line + 1)));
        };
        let value: f64 = rec[d + 1]
            .parse()
            .map_err(|_| Error::input(format!("potential CSV line {}: bad value", line + 1)))?;
        let class = ints[d];
        if class < 1 {
            return Err(Error::input(format!("potential CSV line {}: classes start at 1", line + 1)));
        }
        if let Some(v) = window.find(&ints[..d], (class - 1) as usize) {
            values[v] = value;
        }
    }
    GridFunction::new(window, values)
}
