use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetTable, Problem};
use crate::error::{Error, Result};
use crate::param::{GradientEvaluation, ParameterLayout, TensorSpec};

/// Mean binary cross-entropy of a linear model `σ(xᵀw + b)` plus
/// `(l2/2)‖w‖²` (the bias is not regularized).
///
/// With a batch size set, batch id `k` maps to batch `k mod B` of epoch
/// `k div B`; each epoch is a fresh seeded permutation of the rows.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    data: Arc<DatasetTable>,
    l2: f64,
    batch_size: Option<usize>,
    seed: u64,
    layout: Arc<ParameterLayout>,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticProblem {
    pub fn new(data: DatasetTable, l2: f64) -> Result<Self> {
        if !(l2 >= 0.0 && l2.is_finite()) {
            return Err(Error::Problem(format!("l2 must be >= 0, got {l2}")));
        }
        if data.is_empty() {
            return Err(Error::Problem("logistic problem needs a non-empty dataset".into()));
        }
        let layout = Arc::new(ParameterLayout::new(vec![
            TensorSpec::vector("w", data.dim()),
            TensorSpec::scalar("b"),
        ])?);
        Ok(Self {
            data: Arc::new(data),
            l2,
            batch_size: None,
            seed: 0,
            layout,
        })
    }

    pub fn with_batches(mut self, batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Problem("batch size must be >= 1".into()));
        }
        self.batch_size = Some(batch_size.min(self.data.len()));
        self.seed = seed;
        Ok(self)
    }

    pub fn batches_per_epoch(&self) -> usize {
        match self.batch_size {
            Some(bs) => self.data.len().div_ceil(bs),
            None => 1,
        }
    }

    /// Row indices used by `batch`. Full dataset when unbatched or `None`.
    pub fn batch_rows(&self, batch: Option<u64>) -> Vec<usize> {
        let (Some(bs), Some(k)) = (self.batch_size, batch) else {
            return (0..self.data.len()).collect();
        };
        let per_epoch = self.batches_per_epoch() as u64;
        let (epoch, index) = (k / per_epoch, (k % per_epoch) as usize);
        let mut perm: Vec<usize> = (0..self.data.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(epoch);
        perm.shuffle(&mut rng);
        let start = index * bs;
        perm[start..(start + bs).min(perm.len())].to_vec()
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

    fn margin(&self, w: &[f64], row: usize) -> f64 {
        let d = self.data.dim();
        let x = self.data.features(row);
        x.iter().zip(&w[..d]).map(|(a, b)| a * b).sum::<f64>() + w[d]
    }
}

impl Problem for LogisticProblem {
    fn name(&self) -> &str {
        "logistic"
    }

    fn layout(&self) -> &Arc<ParameterLayout> {
        &self.layout
    }

    fn evaluate(&self, w: &[f64], batch: Option<u64>) -> Result<GradientEvaluation> {
        self.check(w)?;
        let d = self.data.dim();
        let rows = self.batch_rows(batch);
        let inv = 1.0 / rows.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; d + 1];
        for &r in &rows {
            let z = self.margin(w, r);
            let y = self.data.label(r);
            loss += softplus(z) - y * z;
            let dz = (sigmoid(z) - y) * inv;
            for (g, x) in grad[..d].iter_mut().zip(self.data.features(r)) {
                *g += dz * x;
            }
            grad[d] += dz;
        }
        loss *= inv;
        for (g, wi) in grad[..d].iter_mut().zip(&w[..d]) {
            loss += 0.5 * self.l2 * wi * wi;
            *g += self.l2 * wi;
        }
        Ok(GradientEvaluation {
            loss,
            gradient: grad,
            batch_id: batch,
        })
    }

    fn exact_hessian_diag(&self, w: &[f64]) -> Option<Vec<f64>> {
        let d = self.data.dim();
        let n = self.data.len() as f64;
        let mut diag = vec![0.0; d + 1];
        for r in 0..self.data.len() {
            let s = sigmoid(self.margin(w, r));
            let c = s * (1.0 - s) / n;
            for (h, x) in diag[..d].iter_mut().zip(self.data.features(r)) {
                *h += c * x * x;
            }
            diag[d] += c;
        }
        for h in &mut diag[..d] {
            *h += self.l2;
        }
        Some(diag)
    }

    fn hvp(&self, w: &[f64], u: &[f64], batch: Option<u64>) -> Option<Vec<f64>> {
        if u.len() != self.layout.len() || w.len() != u.len() {
            return None;
        }
        let d = self.data.dim();
        let rows = self.batch_rows(batch);
        let inv = 1.0 / rows.len() as f64;
        let mut out = vec![0.0; d + 1];
        for &r in &rows {
            let s = sigmoid(self.margin(w, r));
            let x = self.data.features(r);
            let xu = x.iter().zip(&u[..d]).map(|(a, b)| a * b).sum::<f64>() + u[d];
            let c = s * (1.0 - s) * xu * inv;
            for (o, xi) in out[..d].iter_mut().zip(x) {
                *o += c * xi;
            }
            out[d] += c;
        }
        for (o, ui) in out[..d].iter_mut().zip(&u[..d]) {
            *o += self.l2 * ui;
        }
        Some(out)
    }

    fn is_stochastic(&self) -> bool {
        self.batch_size.is_some_and(|bs| bs < self.data.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> DatasetTable {
        DatasetTable::new(vec![
            (vec![1.0, 0.5], 1),
            (vec![-0.3, 2.0], 0),
            (vec![0.7, -1.1], 1),
            (vec![-1.5, 0.2], 0),
            (vec![0.1, 0.1], 1),
        ])
        .unwrap()
    }

    #[test]
    fn uninformative_model_costs_ln2() {
        let p = LogisticProblem::new(toy(), 0.0).unwrap();
        let e = p.evaluate(&[0.0, 0.0, 0.0], None).unwrap();
        assert!((e.loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn saturated_margin_costs_nothing() {
        let data = DatasetTable::new(vec![(vec![1.0], 1), (vec![2.0], 1)]).unwrap();
        let p = LogisticProblem::new(data, 0.0).unwrap();
        let e = p.evaluate(&[1e3, 0.0], None).unwrap();
        assert!(e.loss < 1e-300, "{}", e.loss);
        assert!(e.is_finite());
        let e = p.evaluate(&[-1e4, 0.0], None).unwrap();
        assert!(e.loss.is_finite() && e.loss > 1e3);
    }

    #[test]
    fn batches_cover_each_epoch_once() {
        let p = LogisticProblem::new(toy(), 0.1).unwrap().with_batches(2, 11).unwrap();
        assert_eq!(p.batches_per_epoch(), 3);
        for epoch in 0..4u64 {
            let mut seen: Vec<usize> = (0..3).flat_map(|i| p.batch_rows(Some(epoch * 3 + i))).collect();
            seen.sort_unstable();
            assert_eq!(seen, vec![0, 1, 2, 3, 4]);
        }
        assert_eq!(p.batch_rows(Some(7)), p.batch_rows(Some(7)));
        let epochs: Vec<Vec<usize>> = (0..6u64).map(|e| p.batch_rows(Some(e * 3))).collect();
        assert!(epochs.windows(2).any(|w| w[0] != w[1]));
    }
}
