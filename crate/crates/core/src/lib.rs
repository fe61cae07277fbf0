//! Discrete magnetic Schrodinger operators on periodic lattice graphs, together
//! with numerical probes of Carleman estimates, frozen-coefficient symbol bounds,
//! Caccioppoli and three-balls inequalities, and the reduction of hexagonal and
//! star graphs to one-point graphs.
//!
//! Everything is real arithmetic on finite vertex windows except the plane-wave
//! multiplier checks, which use complex samples on a periodic torus.

pub mod carleman;
pub mod error;
pub mod graph_core;
pub mod harmonic_solver;
pub mod linalg;
pub mod operators;
pub mod reduction;
pub mod symbols;
pub mod three_balls;

pub use error::{Error, Result};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
