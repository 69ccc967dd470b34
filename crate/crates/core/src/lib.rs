//! Kernel plug-in density level-set estimation.
//!
//! The crate provides kernel density estimates in the volume-bandwidth
//! convention, exact evaluation of weighted symmetric-difference functionals
//! between plug-in and true level sets, the limiting variance constants of
//! their central limit theorem, a subsampling variance estimator, an online
//! anomaly test, and a seeded Monte Carlo harness.

pub mod assumptions;
pub mod asymptotics;
pub mod cli;
pub mod data;
pub mod error;
pub mod experiments;
pub mod field;
pub mod inference;
pub mod kde;
pub mod kernel;
pub mod levelset;
pub mod models;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};

/// Version tag embedded in every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
