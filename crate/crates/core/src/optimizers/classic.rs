use super::{check_gradient, mismatch, GradientSource, RuleOutput, StepCtx};
use crate::error::Result;
use crate::param::{OptimizerState, StateBuffers};

pub(super) fn sgd(ctx: &StepCtx<'_>, w: &mut [f64], g: &[f64]) -> f64 {
    let lr = ctx.lr_t();
    for (wi, gi) in w.iter_mut().zip(g) {
        *wi -= lr * gi;
    }
    lr
}

pub(super) fn momentum(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Velocity { v } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let (lr, gamma) = (ctx.lr_t(), ctx.h().momentum);
    for ((wi, vi), gi) in w.iter_mut().zip(v.iter_mut()).zip(g) {
        *vi = gamma * *vi - lr * gi;
        *wi += *vi;
    }
    Ok(lr)
}

/// Nesterov: the only gradient of the step is taken at `w + γ·v`.
pub(super) fn nag(
    ctx: &StepCtx<'_>,
    state: &OptimizerState,
    w: &[f64],
    source: &dyn GradientSource,
) -> Result<RuleOutput> {
    let StateBuffers::Velocity { v } = &state.buffers else {
        return Err(mismatch(ctx.spec.id));
    };
    let gamma = ctx.h().momentum;
    let ahead: Vec<f64> = w.iter().zip(v).map(|(wi, vi)| wi + gamma * vi).collect();
    let eval = source.gradient(&ahead)?;
    check_gradient(&eval, ctx.t)?;
    let mut next = state.clone();
    let mut weights = w.to_vec();
    let lr = momentum(ctx, &mut next.buffers, &mut weights, &eval.gradient)?;
    next.step_count += 1;
    Ok(RuleOutput {
        weights,
        state: next,
        effective_lr: lr,
        loss: eval.loss,
        grad_norm: crate::kernels::norm(&eval.gradient),
    })
}
