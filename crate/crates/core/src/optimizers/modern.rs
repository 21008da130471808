use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::adamw_update;
use super::{check_gradient, mismatch, GradientSource, RuleOutput, StepCtx};
use crate::error::{Error, Result};
use crate::kernels::{hutchinson_from_probes, newton_schulz_rows, norm, rademacher};
use crate::par::Execution;
use crate::param::{HessianEstimator, OptimizerState, StateBuffers, TensorKind};

/// Step-by-step Adan with decoupled decay `(1 + λη)⁻¹`. At `t = 1` the
/// gradient difference is zero.
pub(super) fn adan(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Adan { m, v, n, g_prev } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let lr = ctx.lr_t();
    let prev = g_prev.get_or_insert_with(|| g.to_vec());
    let shrink = 1.0 / (1.0 + h.weight_decay * lr);
    for i in 0..w.len() {
        let diff = g[i] - prev[i];
        m[i] = (1.0 - h.beta1) * m[i] + h.beta1 * g[i];
        v[i] = (1.0 - h.beta2) * v[i] + h.beta2 * diff;
        let nes = g[i] + (1.0 - h.beta2) * diff;
        n[i] = (1.0 - h.beta3) * n[i] + h.beta3 * nes * nes;
        let step = lr / (n[i].sqrt() + h.eps);
        w[i] = shrink * (w[i] - step * (m[i] + (1.0 - h.beta2) * v[i]));
    }
    prev.copy_from_slice(g);
    Ok(lr)
}

/// Lion: sign of the `β₁` interpolation; the stored moment uses `β₂`.
pub(super) fn lion(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Lion { m } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let lr = ctx.lr_t();
    let decay = if h.paper_literal_decay_sign {
        -h.weight_decay
    } else {
        h.weight_decay
    };
    for i in 0..w.len() {
        let m_l = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
        m[i] = h.beta2 * m[i] + (1.0 - h.beta2) * g[i];
        w[i] -= lr * (sign(m_l) + decay * w[i]);
    }
    Ok(lr)
}

/// `sign` with `sign(0) = 0`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sophia: decay, then the clipped preconditioned step. The diagonal Hessian
/// EMA is refreshed on steps `1, k+1, 2k+1, ...` from estimates at `w_t`.
pub(super) fn sophia(
    ctx: &StepCtx<'_>,
    state: &OptimizerState,
    w: &[f64],
    source: &dyn GradientSource,
) -> Result<RuleOutput> {
    let eval = source.gradient(w)?;
    check_gradient(&eval, ctx.t)?;
    let g = &eval.gradient;
    let mut next = state.clone();
    let StateBuffers::Sophia { m, h: curv } = &mut next.buffers else {
        return Err(mismatch(ctx.spec.id));
    };
    let hp = ctx.h();
    for (mi, gi) in m.iter_mut().zip(g) {
        *mi = hp.beta1 * *mi + (1.0 - hp.beta1) * gi;
    }
    if (ctx.t - 1) % hp.k == 0 {
        let h_hat = match hp.hessian_estimator {
            HessianEstimator::Exact => source
                .hessian_diag(w)
                .ok_or_else(|| Error::Problem("exact Hessian diagonal is not available".into()))?,
            HessianEstimator::Hutchinson => {
                let mut rng = ChaCha8Rng::seed_from_u64(ctx.spec.seed);
                rng.set_stream(ctx.t);
                let probes: Vec<Vec<f64>> = (0..hp.hessian_samples).map(|_| rademacher(w.len(), &mut rng)).collect();
                hutchinson_from_probes(&probes, Execution::Sequential, |u| source.hvp(w, u))?
            }
        };
        if h_hat.len() != w.len() {
            return Err(Error::LengthMismatch {
                expected: w.len(),
                actual: h_hat.len(),
            });
        }
        for (hi, e) in curv.iter_mut().zip(&h_hat) {
            *hi = hp.beta2 * *hi + (1.0 - hp.beta2) * e;
        }
    }
    let lr = ctx.lr_t();
    let mut weights = w.to_vec();
    for i in 0..weights.len() {
        weights[i] -= lr * hp.weight_decay * weights[i];
        let ratio = m[i] / (hp.delta * curv[i]).max(hp.eps);
        weights[i] -= lr * ratio.clamp(-1.0, 1.0);
    }
    next.step_count += 1;
    Ok(RuleOutput {
        weights,
        state: next,
        effective_lr: lr,
        loss: eval.loss,
        grad_norm: norm(g),
    })
}

/// Muon: orthogonalized heavy-ball momentum on 2-D tensors, AdamW elsewhere.
pub(super) fn muon(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Muon { m, adam_m, adam_v } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let lr = ctx.lr_t();
    for (spec, range) in ctx.layout.tensors() {
        if spec.kind == TensorKind::Matrix2d {
            let (rows, cols) = spec.rows_cols();
            let mr = &mut m[range.clone()];
            for (mj, gj) in mr.iter_mut().zip(&g[range.clone()]) {
                *mj = h.momentum * *mj + gj;
            }
            let o = newton_schulz_rows(mr, rows, cols, h.ns_iters)?;
            for (wj, oj) in w[range].iter_mut().zip(&o) {
                *wj -= lr * oj;
            }
        } else {
            adamw_update(
                ctx,
                &mut adam_m[range.clone()],
                &mut adam_v[range.clone()],
                &mut w[range.clone()],
                &g[range],
            );
        }
    }
    Ok(lr)
}
