//! Reproducibility analysis for noisy single-qubit Hadamard circuits.
//!
//! The toolkit models each register element by its readout fidelities
//! `f0`, `f1` and Hadamard angle error `θ`, collapses them into the composite
//! parameter `γ = ε - 2 sin 2θ (f - ½)`, and decides whether the device
//! reproduces the ideal uniform output within a Hellinger tolerance `δ` by
//! comparing `|γ|` against `γ_max(n, δ)`.
//!
//! Modules, bottom up:
//!
//! - [`noise`]: noisy Hadamard, control-error rotation, readout channel.
//! - [`distance`]: distributions, Bhattacharyya coefficient, Hellinger distance.
//! - [`sampler`] and [`archive`]: deterministic shot simulation and run directories.
//! - [`estimator`]: per-experiment estimators and population statistics.
//! - [`bounds`]: `γ_D`, `γ_max`, verdicts, tolerance floor, sample planning.
//! - [`tables`]: CSV outputs.

pub mod archive;
pub mod bounds;
pub mod distance;
pub mod error;
pub mod estimator;
pub mod noise;
pub mod sampler;
pub mod tables;

pub use error::{Error, Result};
