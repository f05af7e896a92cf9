//! Numerical toolkit for quantitative central limit theorems of Wiener chaos
//! functionals with values in `L²([0,1])`.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, parallel Monte Carlo
//! and the command line live in the companion `chaosclt` crate.

#![no_std]

extern crate alloc;

pub mod bounds;
pub mod breuer_major;
pub mod chaos;
pub mod error;
pub mod hermite;
pub mod hilbert;
pub mod tensor;
pub mod toeplitz;

pub use error::{Error, Result};
