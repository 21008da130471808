//! Analytic derivatives against central differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::kernels::rademacher;
use crate::problems::{fd_gradient, fd_hvp, Problem, DEFAULT_FD_STEP};

pub const GRAD_TOLERANCE: f64 = 1e-6;
pub const HVP_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_POINTS: usize = 10;

/// The coordinate with the largest error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Worst {
    pub point: usize,
    pub coordinate: String,
    pub analytic: f64,
    pub numeric: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub problem: String,
    pub points: usize,
    pub seed: u64,
    /// Max over points of `‖g − ĝ‖∞ / max(‖g‖∞, ‖ĝ‖∞, 1)`.
    pub grad_error: f64,
    pub grad_worst: Option<Worst>,
    /// Same measure for `H·u`, when the problem has an exact product.
    pub hvp_error: Option<f64>,
    pub hvp_worst: Option<Worst>,
    pub passed: bool,
}

impl GradcheckReport {
    pub fn render_text(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "gradcheck {} ({} points, seed {}): {verdict}\n  gradient max rel error {:.3e} (tol {GRAD_TOLERANCE:e})",
            self.problem, self.points, self.seed, self.grad_error
        );
        let worst = |w: &Worst| {
            format!(
                " worst at point {} coordinate {}: analytic {:.10e} vs numeric {:.10e}",
                w.point, w.coordinate, w.analytic, w.numeric
            )
        };
        if let Some(w) = &self.grad_worst {
            s.push_str(&format!("\n   {}", worst(w)));
        }
        match self.hvp_error {
            Some(e) => s.push_str(&format!("\n  hvp max rel error {e:.3e} (tol {HVP_TOLERANCE:e})")),
            None => s.push_str("\n  hvp not available"),
        }
        if let Some(w) = &self.hvp_worst {
            s.push_str(&format!("\n   {}", worst(w)));
        }
        s
    }
}

fn compare(point: usize, problem: &dyn Problem, a: &[f64], b: &[f64]) -> (f64, Worst) {
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    let mut worst = Worst {
        point,
        coordinate: problem.layout().coordinate_name(0),
        analytic: a[0],
        numeric: b[0],
        error: -1.0,
    };
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        // NaN compares false, so force it to be the worst.
        let e = (x - y).abs() / scale;
        let e = if e.is_nan() { f64::INFINITY } else { e };
        if e > worst.error {
            worst = Worst {
                point,
                coordinate: problem.layout().coordinate_name(i),
                analytic: *x,
                numeric: *y,
                error: e,
            };
        }
    }
    (worst.error, worst)
}

/// Check `points` seeded points around the problem's start (uniform offsets
/// in `[-0.5, 0.5]` per coordinate). The first point is the start itself.
pub fn gradcheck(problem: &dyn Problem, points: usize, seed: u64) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = problem.initial_point();
    let mut grad_worst: Option<Worst> = None;
    let mut hvp_worst: Option<Worst> = None;
    let mut has_hvp = true;
    for p in 0..points {
        let w: Vec<f64> = if p == 0 {
            base.clone()
        } else {
            base.iter().map(|x| x + rng.random_range(-0.5..0.5)).collect()
        };
        let analytic = problem.evaluate(&w, None)?.gradient;
        let numeric = fd_gradient(problem, &w, DEFAULT_FD_STEP, None)?;
        let (e, worst) = compare(p, problem, &analytic, &numeric);
        if grad_worst.as_ref().is_none_or(|g| e > g.error) {
            grad_worst = Some(worst);
        }
        let u = rademacher(w.len(), &mut rng);
        match problem.hvp(&w, &u, None) {
            Some(hu) if has_hvp => {
                let fd = fd_hvp(problem, &w, &u, DEFAULT_FD_STEP, None)?;
                let (e, worst) = compare(p, problem, &hu, &fd);
                if hvp_worst.as_ref().is_none_or(|h| e > h.error) {
                    hvp_worst = Some(worst);
                }
            }
            _ => has_hvp = false,
        }
    }
    if !has_hvp {
        hvp_worst = None;
    }
    let grad_error = grad_worst.as_ref().map_or(0.0, |w| w.error);
    let hvp_error = hvp_worst.as_ref().map(|w| w.error);
    let passed = grad_error < GRAD_TOLERANCE && hvp_error.is_none_or(|e| e < HVP_TOLERANCE);
    Ok(GradcheckReport {
        problem: problem.name().to_string(),
        points,
        seed,
        grad_error,
        grad_worst,
        hvp_error,
        hvp_worst,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{DatasetTable, LogisticProblem, QuadraticProblem, RosenbrockProblem};

    #[test]
    fn quadratic_is_tight() {
        let q = QuadraticProblem::random_spd(10, 10.0, 2).unwrap();
        let r = gradcheck(&q, DEFAULT_POINTS, 0).unwrap();
        assert!(r.passed && r.grad_error < 1e-8, "{}", r.render_text());
    }

    #[test]
    fn logistic_and_rosenbrock_pass() {
        let l = LogisticProblem::new(DatasetTable::bundled(), 0.01).unwrap();
        let r = gradcheck(&l, DEFAULT_POINTS, 0).unwrap();
        assert!(r.passed, "{}", r.render_text());
        let rb = RosenbrockProblem::new(4).unwrap();
        let r = gradcheck(&rb, DEFAULT_POINTS, 0).unwrap();
        assert!(r.passed, "{}", r.render_text());
        assert!(r.hvp_error.is_some());
    }
}
