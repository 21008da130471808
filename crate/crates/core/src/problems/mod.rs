//! Analytic objectives with exact derivatives, plus finite-difference oracles.

mod dataset;
mod finite_diff;
mod logistic;
mod quadratic;
mod rosenbrock;

use std::sync::Arc;

pub use dataset::DatasetTable;
pub use finite_diff::{fd_gradient, fd_hvp, DEFAULT_FD_STEP};
pub use logistic::LogisticProblem;
pub use quadratic::{NoisyQuadratic, QuadraticProblem};
pub use rosenbrock::RosenbrockProblem;

use crate::error::Result;
use crate::param::{GradientEvaluation, ParameterLayout};

/// An objective `L(w)` over a fixed layout.
///
/// `evaluate` must be a pure function of `(w, batch)` and the problem's own
/// seed. Stochastic problems derive their randomness from the batch id, so
/// evaluating the same point twice for the same batch gives the same answer.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn layout(&self) -> &Arc<ParameterLayout>;

    fn evaluate(&self, w: &[f64], batch: Option<u64>) -> Result<GradientEvaluation>;

    fn loss(&self, w: &[f64], batch: Option<u64>) -> Result<f64> {
        Ok(self.evaluate(w, batch)?.loss)
    }

    /// Exact `diag(∇²L(w))` when cheap.
    fn exact_hessian_diag(&self, _w: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Exact Hessian-vector product `∇²L(w)·u` when available.
    fn hvp(&self, _w: &[f64], _u: &[f64], _batch: Option<u64>) -> Option<Vec<f64>> {
        None
    }

    /// Known minimizer, if any.
    fn minimizer(&self) -> Option<Vec<f64>> {
        None
    }

    /// Default starting point for benchmark runs.
    fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.layout().len()]
    }

    /// Whether `evaluate` depends on the batch id.
    fn is_stochastic(&self) -> bool {
        false
    }
}
