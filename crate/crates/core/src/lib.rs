//! Tabular off-policy evaluation for finite-horizon, nonstationary MDPs.
//!
//! The crate carries the model types, an exact dynamic-programming oracle,
//! the importance-sampling family of estimators (IS, step-IS, State-MIS,
//! Tabular-MIS and its data-splitting variant) and closed-form asymptotic
//! variance expressions. Everything here is pure and allocation-only, so it
//! builds without `std`; file formats, the parallel sweep harness and the CLI
//! live in the companion `tmis` crate.
//!
//! Time steps are 0-based throughout: a horizon-`H` model has steps
//! `0..H`, and `transitions[t]` is the law of the state at step `t + 1`
//! given the state and action at step `t`.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod dp;
pub mod env;
mod error;
pub mod estimators;
pub mod generate;
pub mod model;
pub mod rng;
pub mod sample;
pub mod stats;
pub mod uniform;

pub use error::{Error, Result};
pub use model::{Dataset, Policy, RewardNoise, Step, TabularMdp, Trajectory};

/// Tolerance used when validating that a vector is a probability distribution.
pub const PROB_TOLERANCE: f64 = 1e-12;
