//! Simulation, Monte Carlo and experiment plumbing around `chaosclt-core`.

pub mod error;
pub mod experiment;
pub mod gaussim;
pub mod table;
pub mod verify;

pub use error::{Error, Result};
