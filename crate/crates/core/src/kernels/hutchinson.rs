use rand::Rng;

use crate::error::Result;
use crate::par::Execution;
use crate::problems::{fd_hvp, Problem, DEFAULT_FD_STEP};

/// A vector of independent ±1 entries.
pub fn rademacher<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Mean of `u ⊙ H·u` over the given probes.
pub fn hutchinson_from_probes<F>(probes: &[Vec<f64>], exec: Execution, hvp: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
{
    let dim = probes.first().map_or(0, Vec::len);
    let products = exec.map(probes, |u| {
        hvp(u).map(|hu| u.iter().zip(&hu).map(|(a, b)| a * b).collect::<Vec<f64>>())
    });
    let mut mean = vec![0.0; dim];
    for p in products {
        for (m, v) in mean.iter_mut().zip(p?) {
            *m += v;
        }
    }
    let inv = 1.0 / probes.len().max(1) as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    Ok(mean)
}

/// Hutchinson estimate of `diag(∇²L(w))` from `samples` Rademacher probes
/// drawn from `rng`. Uses the problem's Hessian-vector product, or central
/// differences of the gradient when it has none.
pub fn hutchinson_diag<R: Rng + ?Sized>(
    problem: &dyn Problem,
    w: &[f64],
    samples: usize,
    batch: Option<u64>,
    rng: &mut R,
    exec: Execution,
) -> Result<Vec<f64>> {
    let probes: Vec<Vec<f64>> = (0..samples.max(1)).map(|_| rademacher(w.len(), rng)).collect();
    hutchinson_from_probes(&probes, exec, |u| match problem.hvp(w, u, batch) {
        Some(hu) => Ok(hu),
        None => fd_hvp(problem, w, u, DEFAULT_FD_STEP, batch),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::QuadraticProblem;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn converges_on_dense_quadratic() {
        let a = nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.7, 0.7, 4.0]);
        let p = QuadraticProblem::new(a, nalgebra::DVector::zeros(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let est = hutchinson_diag(&p, &[0.0, 0.0], 10_000, None, &mut rng, Execution::default()).unwrap();
        assert!((est[0] - 2.0).abs() < 0.1 && (est[1] - 4.0).abs() < 0.2, "{est:?}");
    }

    #[test]
    fn forced_all_ones_probe_gives_row_sums() {
        let a = nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.7, 0.7, 4.0]);
        let p = QuadraticProblem::new(a, nalgebra::DVector::zeros(2)).unwrap();
        let est = hutchinson_from_probes(&[vec![1.0, 1.0]], Execution::Sequential, |u| {
            Ok(p.hvp(&[0.0, 0.0], u, None).unwrap())
        })
        .unwrap();
        assert_eq!(est, vec![2.7, 4.7]);
    }

    #[test]
    fn exact_for_diagonal_hessian() {
        let p = QuadraticProblem::diagonal(&[2.0, 4.0, 0.5], &[0.0; 3]).unwrap();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let est = hutchinson_diag(&p, &[1.0, 2.0, 3.0], 1, None, &mut rng, Execution::Sequential).unwrap();
            assert_eq!(est, vec![2.0, 4.0, 0.5]);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let p = QuadraticProblem::random_spd(6, 10.0, 2).unwrap();
        let w = vec![0.1; 6];
        let a = hutchinson_diag(&p, &w, 64, None, &mut ChaCha8Rng::seed_from_u64(1), Execution::Sequential).unwrap();
        let b = hutchinson_diag(&p, &w, 64, None, &mut ChaCha8Rng::seed_from_u64(1), Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
