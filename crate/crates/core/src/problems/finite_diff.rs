use super::Problem;
use crate::error::Result;

/// Base central-difference step; scaled per coordinate by `max(1, |w_i|)`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central-difference gradient, `(L(w + hᵢeᵢ) − L(w − hᵢeᵢ)) / 2hᵢ` with
/// `hᵢ = h·max(1, |wᵢ|)`.
pub fn fd_gradient(problem: &dyn Problem, w: &[f64], h: f64, batch: Option<u64>) -> Result<Vec<f64>> {
    let mut x = w.to_vec();
    let mut out = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        let hi = h * w[i].abs().max(1.0);
        x[i] = w[i] + hi;
        let up = problem.loss(&x, batch)?;
        x[i] = w[i] - hi;
        let down = problem.loss(&x, batch)?;
        x[i] = w[i];
        // Divide by the step actually taken after rounding.
        let span = (w[i] + hi) - (w[i] - hi);
        out.push((up - down) / span);
    }
    Ok(out)
}

/// Central difference of the gradient along `u`:
/// `(∇L(w + r·u) − ∇L(w − r·u)) / 2r`.
pub fn fd_hvp(problem: &dyn Problem, w: &[f64], u: &[f64], r: f64, batch: Option<u64>) -> Result<Vec<f64>> {
    let plus: Vec<f64> = w.iter().zip(u).map(|(a, b)| a + r * b).collect();
    let minus: Vec<f64> = w.iter().zip(u).map(|(a, b)| a - r * b).collect();
    let gp = problem.evaluate(&plus, batch)?.gradient;
    let gm = problem.evaluate(&minus, batch)?.gradient;
    Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::{GradientEvaluation, ParameterLayout};
    use crate::problems::QuadraticProblem;
    use std::sync::Arc;

    struct Constant(Arc<ParameterLayout>);

    impl Problem for Constant {
        fn name(&self) -> &str {
            "constant"
        }
        fn layout(&self) -> &Arc<ParameterLayout> {
            &self.0
        }
        fn evaluate(&self, w: &[f64], _b: Option<u64>) -> Result<GradientEvaluation> {
            Ok(GradientEvaluation::new(3.5, vec![0.0; w.len()]))
        }
    }

    #[test]
    fn identity_quadratic_gradient() {
        let p = QuadraticProblem::identity(2).unwrap();
        let g = fd_gradient(&p, &[1.0, 2.0], 1e-5, None).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-8 && (g[1] - 2.0).abs() < 1e-8, "{g:?}");
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let p = Constant(Arc::new(ParameterLayout::flat(3).unwrap()));
        assert_eq!(fd_gradient(&p, &[1.0, -4.0, 1e3], 1e-5, None).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn hvp_matches_matrix_and_is_linear() {
        let p = QuadraticProblem::random_spd(5, 10.0, 3).unwrap();
        let w = [0.5, -1.0, 2.0, 0.0, 1.5];
        let u = [1.0, 0.0, -2.0, 0.5, 0.25];
        let exact = p.hvp(&w, &u, None).unwrap();
        let fd = fd_hvp(&p, &w, &u, 1e-5, None).unwrap();
        for (a, b) in exact.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6);
        }
        let u2: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
        let fd2 = fd_hvp(&p, &w, &u2, 1e-5, None).unwrap();
        for (a, b) in fd2.iter().zip(&fd) {
            assert!((a - 2.0 * b).abs() < 1e-5);
        }
        assert_eq!(fd_hvp(&p, &w, &[0.0; 5], 1e-5, None).unwrap(), vec![0.0; 5]);
    }
}
