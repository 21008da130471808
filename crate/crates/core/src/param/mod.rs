//! Parameters, gradients, hyperparameters and optimizer state.
//!
//! Everything is 64-bit and flat: a [`ParameterLayout`] names and shapes the
//! tensors, and every buffer that follows the weights (gradients, moments,
//! slow weights) is a `Vec<f64>` in the same layout order.

mod hyper;
mod layout;
mod state;

pub use hyper::{HessianEstimator, Hyperparameters};
pub use layout::{GradientEvaluation, ParameterLayout, ParameterSet, TensorKind, TensorSpec};
pub use state::{state_init, OptimizerState, SecondMoment, StateBuffers};
