use super::{bias, mismatch, StepCtx};
use crate::error::Result;
use crate::kernels::{adaptive_grad_clip, gradient_centralize, norm};
use crate::param::{StateBuffers, TensorKind};
use crate::schedules::ranger21_multiplier;

/// Combined Ranger21 multiplier at `t`: the configured schedule times the
/// built-in warm-up / warm-down over `t_max`.
pub(super) fn ranger21_mult(ctx: &StepCtx<'_>) -> f64 {
    let h = ctx.h();
    ctx.mult * ranger21_multiplier(ctx.t, h.t_max, h.warmup_steps(), h.warmdown_steps(), h.beta2)
}

/// Clip, centralize, positive-negative momentum, scheduled step, stable
/// decay with norm loss, then lookahead every `k` steps.
pub(super) fn ranger21(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Ranger21 {
        m_prev,
        m_prev2,
        v,
        v_max,
        slow,
    } = buf
    else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let t = ctx.t;
    let slow = slow.get_or_insert_with(|| w.to_vec());

    let mut g = g.to_vec();
    for (spec, range) in ctx.layout.tensors() {
        let (_, cols) = spec.rows_cols();
        adaptive_grad_clip(&mut g[range.clone()], &w[range.clone()], cols, h.tau_c, h.eps_c);
        // Centralizing a 1-D tensor would remove its mean direction entirely.
        if spec.kind == TensorKind::Matrix2d {
            gradient_centralize(&mut g[range]);
        }
    }

    let lr = h.lr * ranger21_mult(ctx);
    let b1sq = h.beta1 * h.beta1;
    let (bc1, bc2) = (bias(h.beta1, t), bias(h.beta2, t));
    let pnm_norm = ((1.0 + h.beta0).powi(2) + h.beta0 * h.beta0).sqrt();
    let mut y = vec![0.0; w.len()];
    let mut v_hat = vec![0.0; w.len()];
    for i in 0..w.len() {
        let m = b1sq * m_prev2[i] + (1.0 - b1sq) * g[i];
        let m_hat = ((1.0 + h.beta0) * m - h.beta0 * m_prev[i]) / bc1;
        m_prev2[i] = m_prev[i];
        m_prev[i] = m;
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
        v_max[i] = v_max[i].max(v[i]);
        v_hat[i] = v_max[i] / bc2;
        y[i] = m_hat / (pnm_norm * (v_hat[i].sqrt() + h.eps));
    }

    for (_, range) in ctx.layout.tensors() {
        let w_norm = norm(&w[range.clone()]);
        let mean_v = v_hat[range.clone()].iter().sum::<f64>() / range.len() as f64;
        let d_scale = if h.weight_decay > 0.0 && w_norm > 0.0 && mean_v > 0.0 {
            lr / mean_v.sqrt() * h.weight_decay * (1.0 - 1.0 / w_norm)
        } else {
            0.0
        };
        for j in range {
            w[j] -= lr * y[j] + d_scale * w[j];
        }
    }

    if t % h.k == 0 {
        for (l, wi) in slow.iter_mut().zip(w.iter_mut()) {
            *l = h.beta_la * *l + (1.0 - h.beta_la) * *wi;
            *wi = *l;
        }
    }
    Ok(lr)
}
