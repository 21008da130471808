use crate::error::{Error, Result};

/// Row and column factors of a second-moment matrix: `V̂ = R·C / (1ᵀR)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredSecondMoment {
    /// `R`, length `n` (one entry per row).
    pub row: Vec<f64>,
    /// `C`, length `m` (one entry per column).
    pub col: Vec<f64>,
}

impl FactoredSecondMoment {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            row: vec![0.0; rows],
            col: vec![0.0; cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.row.len()
    }

    pub fn cols(&self) -> usize {
        self.col.len()
    }

    /// Row-major `V̂ = R·C / (1ᵀR)`.
    pub fn reconstruct(&self) -> Result<Vec<f64>> {
        let total: f64 = self.row.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Kernel("factored second moment has 1ᵀR = 0".into()));
        }
        let mut v = Vec::with_capacity(self.rows() * self.cols());
        for r in &self.row {
            for c in &self.col {
                v.push(r * c / total);
            }
        }
        Ok(v)
    }
}

/// Adafactor's decay schedule `1 − t^(−e)`.
pub fn adafactor_beta2(t: u64, e: f64) -> f64 {
    1.0 - (t.max(1) as f64).powf(-e)
}

/// One EMA step of the factors from the row-major gradient `g` (`n × m`),
/// returning the updated factors and `V̂`.
pub fn factored_update(
    state: &FactoredSecondMoment,
    g: &[f64],
    t: u64,
    eps1: f64,
    e: f64,
) -> Result<(FactoredSecondMoment, Vec<f64>)> {
    let (n, m) = (state.rows(), state.cols());
    if g.len() != n * m {
        return Err(Error::LengthMismatch {
            expected: n * m,
            actual: g.len(),
        });
    }
    let beta = adafactor_beta2(t, e);
    let mut row_sum = vec![0.0; n];
    let mut col_sum = vec![0.0; m];
    for i in 0..n {
        for j in 0..m {
            let sq = g[i * m + j] * g[i * m + j] + eps1;
            row_sum[i] += sq;
            col_sum[j] += sq;
        }
    }
    let next = FactoredSecondMoment {
        row: state
            .row
            .iter()
            .zip(&row_sum)
            .map(|(r, s)| beta * r + (1.0 - beta) * s)
            .collect(),
        col: state
            .col
            .iter()
            .zip(&col_sum)
            .map(|(c, s)| beta * c + (1.0 - beta) * s)
            .collect(),
    };
    let v_hat = next.reconstruct()?;
    Ok((next, v_hat))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_hand_example() {
        // G² = [[1,2],[3,4]]
        let g = [1.0, 2f64.sqrt(), 3f64.sqrt(), 2.0];
        let (s, v) = factored_update(&FactoredSecondMoment::zeros(2, 2), &g, 1, 0.0, 0.8).unwrap();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(&s.row, &[3.0, 7.0]), "{:?}", s.row);
        assert!(close(&s.col, &[4.0, 6.0]), "{:?}", s.col);
        assert!(close(&v, &[1.2, 1.8, 2.8, 4.2]), "{v:?}");
    }

    #[test]
    fn zero_gradient_gives_uniform_eps() {
        let eps = 1e-3;
        let (_, v) = factored_update(&FactoredSecondMoment::zeros(3, 4), &[0.0; 12], 1, eps, 0.8).unwrap();
        assert!(v.iter().all(|x| (x - eps).abs() < 1e-18));
    }

    #[test]
    fn rank_one_is_reconstructed_exactly() {
        let a = [1.0, 2.0, 0.5];
        let b = [3.0, 0.25];
        let g: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
        let (_, v) = factored_update(&FactoredSecondMoment::zeros(3, 2), &g, 1, 0.0, 0.8).unwrap();
        for (vi, gi) in v.iter().zip(&g) {
            assert!((vi - gi * gi).abs() < 1e-12 * gi * gi);
        }
    }

    #[test]
    fn beta_schedule() {
        assert_eq!(adafactor_beta2(1, 0.8), 0.0);
        assert!((adafactor_beta2(100, 0.8) - (1.0 - 100f64.powf(-0.8))).abs() < 1e-15);
    }

    #[test]
    fn all_zero_factors_rejected() {
        assert!(FactoredSecondMoment::zeros(2, 2).reconstruct().is_err());
    }
}
