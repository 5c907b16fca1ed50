//! Uncertainty bookkeeping for active SLAM on 2D grids.
//!
//! The crate stores *dispersion probabilities* (the probability that a
//! Gaussian measurement falls inside a small rectangle around its mean) in a
//! log-odds grid, turns that grid into an uncertainty map, extracts
//! uncertainty frontiers from its gradient, and scores whole maps with the
//! signed relative entropy (SiREn).
//!
//! Module map:
//! - [`grid`]: world-anchored containers, stencils and the layer file format.
//! - [`dispersion`]: Gaussian beliefs, rectangle probabilities and the Gauss bound.
//! - [`belief`]: log-odds conversions, the blended and gated updates, priors,
//!   and sensor field-of-view application.
//! - [`analysis`]: uncertainty maps, frontiers and SiREn.
//! - [`exec`]: sequential / rayon execution switch shared by the map passes.

pub mod analysis;
pub mod belief;
pub mod dispersion;
pub mod error;
pub mod exec;
pub mod grid;

pub use error::{Error, Result};
pub use exec::Execution;
