//! Dyadic increments, Haar coefficients and sampling of fractional Brownian
//! sheets, for studying sheets as additive charges on dyadic figures.

pub mod charge;
pub mod criteria;
pub mod counterexample;
pub mod cube;
pub mod dyadic;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod haar;
pub mod increments;
pub mod report;
pub mod rng;
pub mod sampler;

pub use cube::{DyadicCube, Figure, Rectangle};
pub use dyadic::{Dyadic, Sqrt2Dyadic};
pub use error::{Error, Result};
pub use exec::Execution;
pub use experiment::{run, ExperimentConfig, RunOutput, Subcommand};
pub use haar::HaarIndex;
pub use increments::{CoefficientTable, GridSample, IncrementPyramid};
pub use sampler::{HurstVector, KroneckerSampler};
