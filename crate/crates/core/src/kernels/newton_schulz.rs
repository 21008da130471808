use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_NS_ITERS: usize = 5;

/// Approximate orthogonalization of `m` by the cubic Newton–Schulz iteration
/// `X ← 1.5·X − 0.5·X·Xᵀ·X`, starting from `X₀ = M / ‖M‖_F`.
///
/// Singular values below 1 grow by at most 1.5× per round, so the count
/// needed depends on `σ_min(M) / ‖M‖_F`. A zero matrix maps to zero.
pub fn newton_schulz(m: &DMatrix<f64>, iters: usize) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Kernel("newton_schulz input has non-finite entries".into()));
    }
    if iters == 0 {
        return Err(Error::Kernel("newton_schulz needs at least one iteration".into()));
    }
    let fro = m.norm();
    if fro == 0.0 {
        return Ok(DMatrix::zeros(m.nrows(), m.ncols()));
    }
    let mut x = m / fro;
    let wide = x.nrows() <= x.ncols();
    for _ in 0..iters {
        // Multiply through the smaller Gram matrix.
        let cubic = if wide {
            (&x * x.transpose()) * &x
        } else {
            &x * (x.transpose() * &x)
        };
        x = &x * 1.5 - cubic * 0.5;
    }
    Ok(x)
}

/// [`newton_schulz`] on a row-major `rows × cols` buffer.
pub fn newton_schulz_rows(values: &[f64], rows: usize, cols: usize, iters: usize) -> Result<Vec<f64>> {
    if values.len() != rows * cols {
        return Err(Error::LengthMismatch {
            expected: rows * cols,
            actual: values.len(),
        });
    }
    let m = DMatrix::from_row_slice(rows, cols, values);
    let x = newton_schulz(&m, iters)?;
    Ok(row_major(&x))
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}
