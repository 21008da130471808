use std::sync::Arc;

use optbench::harness::gradcheck;
use optbench::param::{GradientEvaluation, ParameterLayout};
use optbench::problems::{Problem, QuadraticProblem, RosenbrockProblem};
use optbench::Result;

/// A problem whose gradient is wrong in exactly one coordinate.
struct Corrupted<P> {
    inner: P,
    index: usize,
    offset: f64,
}

impl<P: Problem> Problem for Corrupted<P> {
    fn name(&self) -> &str {
        "corrupted"
    }

    fn layout(&self) -> &Arc<ParameterLayout> {
        self.inner.layout()
    }

    fn evaluate(&self, w: &[f64], batch: Option<u64>) -> Result<GradientEvaluation> {
        let mut e = self.inner.evaluate(w, batch)?;
        e.gradient[self.index] += self.offset;
        Ok(e)
    }

    fn loss(&self, w: &[f64], batch: Option<u64>) -> Result<f64> {
        self.inner.loss(w, batch)
    }

    fn initial_point(&self) -> Vec<f64> {
        self.inner.initial_point()
    }
}

#[test]
fn quadratic_error_is_tiny() {
    let r = gradcheck(&QuadraticProblem::random_spd(8, 25.0, 4).unwrap(), 10, 1).unwrap();
    assert!(r.passed);
    assert!(r.grad_error < 1e-8, "{}", r.grad_error);
    assert!(r.hvp_error.unwrap() < 1e-8);
}

#[test]
fn corrupted_gradient_fails_and_names_coordinate() {
    let p = Corrupted {
        inner: RosenbrockProblem::new(4).unwrap(),
        index: 2,
        offset: 1e-3,
    };
    let r = gradcheck(&p, 10, 0).unwrap();
    assert!(!r.passed);
    let worst = r.grad_worst.as_ref().unwrap();
    assert_eq!(worst.coordinate, "w[2]");
    assert!(r.render_text().contains("w[2]"));
    assert!(r.hvp_error.is_none());
}

#[test]
fn small_corruption_below_tolerance_still_caught_above_it() {
    let make = |offset| Corrupted {
        inner: QuadraticProblem::identity(3).unwrap(),
        index: 0,
        offset,
    };
    assert!(gradcheck(&make(1e-9), 10, 0).unwrap().passed);
    assert!(!gradcheck(&make(1e-5), 10, 0).unwrap().passed);
}
