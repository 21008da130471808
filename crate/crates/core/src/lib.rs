//! A benchmark and reference implementation of gradient-based optimizers.
//!
//! Parameters live in a flat buffer described by a [`param::ParameterLayout`];
//! every optimizer is a pure stepper over that buffer driven by a
//! [`optimizers::GradientSource`]. The [`harness`] module wraps this in a
//! CLI with config files, CSV traces and property checks.

pub mod error;
pub mod harness;
pub mod kernels;
pub mod optimizers;
pub mod par;
pub mod param;
pub mod problems;
pub mod schedules;

pub use error::{Error, Result};
pub use optimizers::{Optimizer, OptimizerId, OptimizerSpec, StepOutcome};
pub use par::Execution;
pub use param::{OptimizerState, ParameterLayout, ParameterSet};
