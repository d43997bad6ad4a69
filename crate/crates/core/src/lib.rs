//! Perturbed-history exploration (PHE) for stochastic linear and logistic
//! bandits.
//!
//! The crate provides the `LinPhe` and `LogPhe` policies, the LinUCB, LinTS,
//! epsilon-greedy, GLM-UCB and LogTS baselines, a seeded experiment harness
//! that reports pseudo-regret curves, and Monte-Carlo checks of the tail
//! bounds that drive the regret analysis of `LinPhe`.

pub mod cli;
pub mod environments;
pub mod error;
pub mod glm;
pub mod harness;
pub mod linalg;
pub mod perturbation;
pub mod policies;
pub mod rng;
pub mod verification;

pub use error::{PheError, Result};
