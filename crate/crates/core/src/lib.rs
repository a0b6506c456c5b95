//! Markovian projections of jump Itô semimartingales, numerically.
//!
//! The crate simulates a source process `Y` whose differential characteristics
//! `(b, c, κ)` may depend on the path or on hidden static randomness, estimates
//! the projected Markovian characteristics `(b̂, ĉ, κ̂)` as conditional
//! expectations given a functional state `Z = Φ(Z₀, Y)`, simulates the
//! mimicking process driven by those coefficients and checks that the
//! one-dimensional marginal laws of `Z` and `Ẑ` agree.
//!
//! Everything here is `no_std` + `alloc`. File formats, the CLI and the
//! thread-parallel drivers live in the `mimic-cli` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod compensator;
pub mod ensemble;
pub mod error;
pub mod family;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod mimic;
pub mod oracle;
pub mod path;
pub mod projector;
pub mod rng;
pub mod scenario;
pub mod simulate;
pub mod truncation;
pub mod updating;
pub mod validator;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use kernel::{Atom, LevyKernel};
pub use path::CadlagPath;
pub use truncation::Truncation;
