use super::{bias, mismatch, StepCtx};
use crate::error::{Error, Result};
use crate::kernels::{adafactor_beta2, factored_update, norm};
use crate::param::{SecondMoment, StateBuffers};
use crate::schedules::{relative_lr, rms};

/// Adafactor without a first moment. 2-D tensors keep factored row/column
/// statistics, other tensors a dense EMA. The step size is the relative rate
/// over all weights times the schedule multiplier; the base `lr` is unused.
pub(super) fn adafactor(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Factored { moments } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    if moments.len() != ctx.layout.entries().len() {
        return Err(mismatch(ctx.spec.id));
    }
    let h = ctx.h();
    let lr = ctx.mult * relative_lr(ctx.t, w, h.eps2, h.q_cap);
    for (i, moment) in moments.iter_mut().enumerate() {
        let range = ctx.layout.range(i);
        let gi = &g[range.clone()];
        let v_hat = match moment {
            SecondMoment::Factored(f) => {
                let (next, v_hat) = factored_update(f, gi, ctx.t, h.eps1, h.e)?;
                *f = next;
                v_hat
            }
            SecondMoment::Dense(v) => {
                if v.len() != gi.len() {
                    return Err(Error::LengthMismatch {
                        expected: gi.len(),
                        actual: v.len(),
                    });
                }
                let beta = adafactor_beta2(ctx.t, h.e);
                for (vj, gj) in v.iter_mut().zip(gi) {
                    *vj = beta * *vj + (1.0 - beta) * (gj * gj + h.eps1);
                }
                v.clone()
            }
        };
        let u: Vec<f64> = gi.iter().zip(&v_hat).map(|(gj, vj)| gj / vj.sqrt()).collect();
        let scale = 1.0 / (rms(&u) / h.tau_c).max(1.0);
        for (wj, uj) in w[range].iter_mut().zip(&u) {
            *wj -= lr * scale * uj;
        }
    }
    Ok(lr)
}

/// `min(max(z, γ_l), γ_u)`.
pub(super) fn lamb_phi(z: f64, gamma_l: f64, gamma_u: f64) -> f64 {
    z.max(gamma_l).min(gamma_u)
}

/// Layer-wise trust ratio over each tensor of the layout.
pub(super) fn lamb(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Moments { m, v } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let (lr, bc1, bc2) = (ctx.lr_t(), bias(h.beta1, ctx.t), bias(h.beta2, ctx.t));
    for (_, range) in ctx.layout.tensors() {
        let mut r = Vec::with_capacity(range.len());
        for j in range.clone() {
            m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
            v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
            let x = (m[j] / bc1) / (v[j] / bc2 + h.eps).sqrt();
            r.push(x + h.weight_decay * w[j]);
        }
        let r_norm = norm(&r);
        if r_norm == 0.0 {
            continue;
        }
        let trust = lamb_phi(norm(&w[range.clone()]), h.gamma_l, h.gamma_u) / r_norm;
        for (wj, rj) in w[range].iter_mut().zip(&r) {
            *wj -= lr * trust * rj;
        }
    }
    Ok(lr)
}
