use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Problem;
use crate::error::{Error, Result};
use crate::param::{GradientEvaluation, ParameterLayout};

/// `L(w) = ½ wᵀAw − bᵀw` with `A` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    name: String,
    layout: Arc<ParameterLayout>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    minimizer: Vec<f64>,
    start: Vec<f64>,
}

impl QuadraticProblem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n || b.len() != n {
            return Err(Error::Problem(format!(
                "quadratic needs square A and matching b, got {}x{} and {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Problem("quadratic coefficients must be finite".into()));
        }
        let asym = (&a - a.transpose()).abs().max();
        if asym > 1e-12 * a.abs().max().max(1.0) {
            return Err(Error::Problem("A is not symmetric".into()));
        }
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Problem("A is not positive definite".into()))?;
        let minimizer = chol.solve(&b).iter().copied().collect();
        Ok(Self {
            name: "quadratic".into(),
            layout: Arc::new(ParameterLayout::flat(n)?),
            a,
            b,
            minimizer,
            start: vec![0.0; n],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n), DVector::zeros(n))
    }

    pub fn diagonal(diag: &[f64], b: &[f64]) -> Result<Self> {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_row_slice(diag)),
            DVector::from_row_slice(b),
        )
    }

    /// Random SPD quadratic with eigenvalues evenly spaced in
    /// `[1/condition, 1]`, a random orthogonal eigenbasis, and a minimizer
    /// drawn from a standard normal. Starts at the origin.
    pub fn random_spd(dim: usize, condition: f64, seed: u64) -> Result<Self> {
        if dim == 0 || !(condition >= 1.0) {
            return Err(Error::Problem(format!(
                "random_spd needs dim >= 1 and condition >= 1, got {dim}, {condition}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: DMatrix<f64> = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
        let q = g.qr().q();
        let lo = 1.0 / condition;
        let eig = DVector::from_fn(dim, |i, _| {
            if dim == 1 {
                1.0
            } else {
                lo + (1.0 - lo) * i as f64 / (dim - 1) as f64
            }
        });
        let mut a: DMatrix<f64> = &q * DMatrix::from_diagonal(&eig) * q.transpose();
        a = (&a + a.transpose()) * 0.5;
        let w_star = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        let b = &a * &w_star;
        let mut p = Self::new(a, b)?;
        p.name = "spd_quadratic".into();
        Ok(p)
    }

    /// Relabel the flat coordinates with another layout of the same size.
    pub fn with_layout(mut self, layout: Arc<ParameterLayout>) -> Result<Self> {
        if layout.len() != self.layout.len() {
            return Err(Error::LengthMismatch {
                expected: self.layout.len(),
                actual: layout.len(),
            });
        }
        self.layout = layout;
        Ok(self)
    }

    pub fn with_start(mut self, start: Vec<f64>) -> Result<Self> {
        if start.len() != self.layout.len() {
            return Err(Error::LengthMismatch {
                expected: self.layout.len(),
                actual: start.len(),
            });
        }
        self.start = start;
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub(crate) fn check_len(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: w.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.a[(i, j)] * u[j]).sum())
            .collect()
    }

    fn exact(&self, w: &[f64]) -> GradientEvaluation {
        let aw = self.apply(w);
        let mut loss = 0.0;
        let mut grad = Vec::with_capacity(w.len());
        for i in 0..w.len() {
            loss += 0.5 * w[i] * aw[i] - self.b[i] * w[i];
            grad.push(aw[i] - self.b[i]);
        }
        GradientEvaluation::new(loss, grad)
    }
}

impl Problem for QuadraticProblem {
    fn name(&self) -> &str {
        &self.name
    }

    fn layout(&self) -> &Arc<ParameterLayout> {
        &self.layout
    }

    fn evaluate(&self, w: &[f64], batch: Option<u64>) -> Result<GradientEvaluation> {
        self.check_len(w)?;
        let mut e = self.exact(w);
        e.batch_id = batch;
        Ok(e)
    }

    fn exact_hessian_diag(&self, _w: &[f64]) -> Option<Vec<f64>> {
        Some(self.a.diagonal().iter().copied().collect())
    }

    fn hvp(&self, _w: &[f64], u: &[f64], _batch: Option<u64>) -> Option<Vec<f64>> {
        (u.len() == self.dim()).then(|| self.apply(u))
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(self.minimizer.clone())
    }

    fn initial_point(&self) -> Vec<f64> {
        self.start.clone()
    }
}

/// A quadratic whose gradient carries zero-mean Gaussian noise. The noise for
/// batch `k` is drawn from ChaCha stream `k` of the problem seed; `batch =
/// None` returns the exact gradient.
#[derive(Debug, Clone)]
pub struct NoisyQuadratic {
    inner: QuadraticProblem,
    noise_scale: f64,
    seed: u64,
}

impl NoisyQuadratic {
    pub fn new(inner: QuadraticProblem, noise_scale: f64, seed: u64) -> Result<Self> {
        if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
            return Err(Error::Problem(format!("noise_scale must be >= 0, got {noise_scale}")));
        }
        Ok(Self {
            inner: inner.with_name("noisy_quadratic"),
            noise_scale,
            seed,
        })
    }

    pub fn quadratic(&self) -> &QuadraticProblem {
        &self.inner
    }

    pub fn noise(&self, batch: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(batch);
        (0..self.inner.dim())
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                self.noise_scale * z
            })
            .collect()
    }
}

impl Problem for NoisyQuadratic {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn layout(&self) -> &Arc<ParameterLayout> {
        self.inner.layout()
    }

    fn evaluate(&self, w: &[f64], batch: Option<u64>) -> Result<GradientEvaluation> {
        let mut e = self.inner.evaluate(w, batch)?;
        if let (Some(k), true) = (batch, self.noise_scale > 0.0) {
            for (g, n) in e.gradient.iter_mut().zip(self.noise(k)) {
                *g += n;
            }
        }
        Ok(e)
    }

    fn exact_hessian_diag(&self, w: &[f64]) -> Option<Vec<f64>> {
        self.inner.exact_hessian_diag(w)
    }

    fn hvp(&self, w: &[f64], u: &[f64], batch: Option<u64>) -> Option<Vec<f64>> {
        self.inner.hvp(w, u, batch)
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        self.inner.minimizer()
    }

    fn initial_point(&self) -> Vec<f64> {
        self.inner.initial_point()
    }

    fn is_stochastic(&self) -> bool {
        self.noise_scale > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_quadratic() {
        let p = QuadraticProblem::identity(2).unwrap();
        let e = p.evaluate(&[3.0, 4.0], None).unwrap();
        assert_eq!(e.loss, 12.5);
        assert_eq!(e.gradient, vec![3.0, 4.0]);
    }

    #[test]
    fn diagonal_readoff_and_minimizer() {
        let p = QuadraticProblem::diagonal(&[2.0, 4.0], &[0.0, 0.0]).unwrap();
        assert_eq!(p.exact_hessian_diag(&[0.0, 0.0]).unwrap(), vec![2.0, 4.0]);
        let p = QuadraticProblem::diagonal(&[2.0, 4.0], &[2.0, 4.0]).unwrap();
        let w = p.minimizer().unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_spd() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(QuadraticProblem::new(a, DVector::zeros(2)).is_err());
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(QuadraticProblem::new(a, DVector::zeros(2)).is_err());
    }

    #[test]
    fn random_spd_has_requested_spectrum() {
        let p = QuadraticProblem::random_spd(10, 10.0, 7).unwrap();
        let eig = p.matrix().clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = eig.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        assert!((hi / lo - 10.0).abs() < 1e-9);
        let w = p.minimizer().unwrap();
        let g = p.evaluate(&w, None).unwrap().gradient;
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn noiseless_matches_quadratic() {
        let q = QuadraticProblem::random_spd(4, 5.0, 1).unwrap();
        let n = NoisyQuadratic::new(q.clone(), 0.0, 9).unwrap();
        let w = [0.3, -1.0, 2.0, 0.5];
        assert_eq!(n.evaluate(&w, Some(3)).unwrap().gradient, q.evaluate(&w, None).unwrap().gradient);
    }

    #[test]
    fn noise_is_seeded_and_unbiased() {
        let q = QuadraticProblem::diagonal(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        let sigma = 0.5;
        let n = NoisyQuadratic::new(q.clone(), sigma, 42).unwrap();
        let w = [0.1, 0.2, 0.3];
        assert_eq!(n.evaluate(&w, Some(5)).unwrap(), n.evaluate(&w, Some(5)).unwrap());
        assert_ne!(n.evaluate(&w, Some(5)).unwrap(), n.evaluate(&w, Some(6)).unwrap());
        let exact = q.evaluate(&w, None).unwrap().gradient;
        let samples = 10_000;
        let mut mean = vec![0.0; 3];
        for k in 0..samples {
            for (m, g) in mean.iter_mut().zip(n.evaluate(&w, Some(k)).unwrap().gradient) {
                *m += g / samples as f64;
            }
        }
        for i in 0..3 {
            assert!((mean[i] - exact[i]).abs() < 3.0 * sigma / 100.0, "coord {i}");
        }
    }
}
