//! Finite-state chain analysis: labeled stochastic matrices, composition,
//! n-step evolution, the recurrent/transient block form, stationary
//! distributions, and the entropy/KL tools for reasoning about them.
//!
//! All logarithms are natural; multiply by [`NATS_TO_BITS`] for bits.

mod classes;
mod estimate;
mod info;
mod matrix;
mod stationary;

pub use classes::{recurrent_classes, BlockDecomposition};
pub use estimate::{estimate_kernel, EstimatedKernel};
pub use info::{
    binary_entropy, entropy, kl_divergence, mixture_entropy_bounds, random_simplex, random_stochastic, sinkhorn,
    MixtureBounds, BOUND_TOL, NATS_TO_BITS,
};
pub use matrix::{compose_matrices, evolve, Distribution, TransitionMatrix, STOCHASTIC_TOL};
pub use stationary::{residual, stationary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarkovError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("row {row} is not stochastic: {detail}")]
    NotStochastic { row: usize, detail: String },
    #[error("state spaces differ: {left} vs {right}")]
    Dimension { left: String, right: String },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("data error: {0}")]
    Data(String),
}
