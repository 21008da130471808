//! Reference computations for the acceptance criteria.
//!
//! Nothing here depends on `optbench`: each helper recomputes its quantity
//! from first principles so the acceptance run compares two independent
//! implementations.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Fourth-order central difference gradient of `f` at `x`, step `h` scaled
/// by `max(1, |x_i|)`.
pub fn five_point_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            let mut at = |d: f64| {
                probe[i] = x[i] + d;
                let v = f(&probe);
                probe[i] = x[i];
                v
            };
            let (p2, p1, m1, m2) = (at(2.0 * step), at(step), at(-step), at(-2.0 * step));
            (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * step)
        })
        .collect()
}

/// `‖a − b‖∞ / max(‖b‖∞, 1)`.
pub fn max_rel_error(a: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(reference)
        .map(|(x, y)| (x - y).abs() / scale)
        .fold(if a.len() == reference.len() { 0.0 } else { f64::INFINITY }, f64::max)
}

/// `(v_t)^(1/p)` for `v_t = β^p·v_{t−1} + (1 − β^p)·|g_t|^p`, `v_0 = 0`,
/// computed with log-sum-exp so large `p` neither overflows nor underflows.
pub fn power_mean_norm(grads: &[f64], beta: f64, p: f64) -> Vec<f64> {
    let log_decay = p * beta.ln();
    let log_fresh = (-log_decay.exp()).ln_1p();
    let mut log_v = f64::NEG_INFINITY;
    grads
        .iter()
        .map(|g| {
            let a = log_decay + log_v;
            let b = log_fresh + p * g.abs().ln();
            let hi = a.max(b);
            log_v = hi + ((a - hi).exp() + (b - hi).exp()).ln();
            (log_v / p).exp()
        })
        .collect()
}

/// Radam's variance rectification term from `ρ_t` and `β2`.
pub fn rectifier(rho_t: f64, beta2: f64) -> f64 {
    let rho_inf = 2.0 / (1.0 - beta2) - 1.0;
    (((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t)).sqrt()
}

/// A random `n × n` orthogonal matrix (QR of a Gaussian matrix).
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

/// `U·diag(s)·Vᵀ` with random orthogonal `U`, `V`.
pub fn with_singular_values<R: Rng>(s: &[f64], rng: &mut R) -> DMatrix<f64> {
    let n = s.len();
    let u = random_orthogonal(n, rng);
    let v = random_orthogonal(n, rng);
    u * DMatrix::from_diagonal(&DVector::from_column_slice(s)) * v.transpose()
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Solve `A·x = b` by LU with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<Vec<f64>> {
    a.clone().lu().solve(b).map(|x| x.iter().copied().collect())
}

/// Largest over smallest eigenvalue of a symmetric matrix.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let e = a.clone().symmetric_eigen().eigenvalues;
    e.max() / e.min()
}

pub fn sup_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}
