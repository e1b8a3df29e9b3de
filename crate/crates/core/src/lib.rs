//! Fairness-constrained training of binary classifiers with a stochastic
//! SQP method and smooth surrogates of the step function.

pub mod data;
pub mod error;
pub mod fairness;
pub mod model;
pub mod runner;
pub mod sqp;
pub mod surrogate;

pub use error::{FairError, Result};
