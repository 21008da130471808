use std::sync::Arc;

use super::Problem;
use crate::error::{Error, Result};
use crate::param::{GradientEvaluation, ParameterLayout};

/// Sum of independent 2-D Rosenbrock valleys over consecutive coordinate
/// pairs: `Σ 100(x₂ᵢ₊₁ − x₂ᵢ²)² + (1 − x₂ᵢ)²`. Global minimum 0 at all-ones.
#[derive(Debug, Clone)]
pub struct RosenbrockProblem {
    layout: Arc<ParameterLayout>,
}

impl RosenbrockProblem {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Problem(format!("rosenbrock needs an even n >= 2, got {n}")));
        }
        Ok(Self {
            layout: Arc::new(ParameterLayout::flat(n)?),
        })
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.layout.len() {
            return Err(Error::LengthMismatch {
                expected: self.layout.len(),
                actual: w.len(),
            });
        }
        Ok(())
    }
}

impl Problem for RosenbrockProblem {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn layout(&self) -> &Arc<ParameterLayout> {
        &self.layout
    }

    fn evaluate(&self, w: &[f64], batch: Option<u64>) -> Result<GradientEvaluation> {
        self.check(w)?;
        let mut loss = 0.0;
        let mut grad = vec![0.0; w.len()];
        for (pair, g) in w.chunks_exact(2).zip(grad.chunks_exact_mut(2)) {
            let (a, b) = (pair[0], pair[1]);
            let r = b - a * a;
            loss += 100.0 * r * r + (1.0 - a) * (1.0 - a);
            g[0] = -400.0 * a * r - 2.0 * (1.0 - a);
            g[1] = 200.0 * r;
        }
        Ok(GradientEvaluation {
            loss,
            gradient: grad,
            batch_id: batch,
        })
    }

    fn exact_hessian_diag(&self, w: &[f64]) -> Option<Vec<f64>> {
        let mut d = vec![0.0; w.len()];
        for (pair, h) in w.chunks_exact(2).zip(d.chunks_exact_mut(2)) {
            let (a, b) = (pair[0], pair[1]);
            h[0] = 1200.0 * a * a - 400.0 * b + 2.0;
            h[1] = 200.0;
        }
        Some(d)
    }

    fn hvp(&self, w: &[f64], u: &[f64], _batch: Option<u64>) -> Option<Vec<f64>> {
        if u.len() != w.len() {
            return None;
        }
        let mut out = vec![0.0; w.len()];
        for i in (0..w.len()).step_by(2) {
            let (a, b) = (w[i], w[i + 1]);
            let haa = 1200.0 * a * a - 400.0 * b + 2.0;
            let hab = -400.0 * a;
            out[i] = haa * u[i] + hab * u[i + 1];
            out[i + 1] = hab * u[i] + 200.0 * u[i + 1];
        }
        Some(out)
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![1.0; self.layout.len()])
    }

    /// The classic `(-1.2, 1)` start in every pair.
    fn initial_point(&self) -> Vec<f64> {
        (0..self.layout.len())
            .map(|i| if i % 2 == 0 { -1.2 } else { 1.0 })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimum_at_ones() {
        let p = RosenbrockProblem::new(4).unwrap();
        let e = p.evaluate(&[1.0; 4], None).unwrap();
        assert_eq!(e.loss, 0.0);
        assert!(e.gradient.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn origin_value() {
        let p = RosenbrockProblem::new(2).unwrap();
        let e = p.evaluate(&[0.0, 0.0], None).unwrap();
        assert_eq!(e.loss, 1.0);
        assert_eq!(e.gradient, vec![-2.0, 0.0]);
    }

    #[test]
    fn odd_dimension_rejected() {
        assert!(RosenbrockProblem::new(3).is_err());
        assert!(RosenbrockProblem::new(0).is_err());
    }
}
