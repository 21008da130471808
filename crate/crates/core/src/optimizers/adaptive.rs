use super::{mismatch, StepCtx};
use crate::error::Result;
use crate::kernels::norm;
use crate::param::StateBuffers;

pub(super) fn adagrad(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Accumulator { a } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let (lr, eps) = (ctx.lr_t(), ctx.h().eps);
    for ((wi, ai), gi) in w.iter_mut().zip(a.iter_mut()).zip(g) {
        *ai += gi * gi;
        *wi -= lr * gi / (*ai + eps).sqrt();
    }
    Ok(lr)
}

/// `β` is read from `beta2`.
pub(super) fn rmsprop(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Rms { b, c: None } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let (lr, beta, eps) = (ctx.lr_t(), ctx.h().beta2, ctx.h().eps);
    for ((wi, bi), gi) in w.iter_mut().zip(b.iter_mut()).zip(g) {
        *bi = beta * *bi + (1.0 - beta) * gi * gi;
        *wi -= lr * gi / (*bi + eps).sqrt();
    }
    Ok(lr)
}

/// No learning rate and no schedule: the step is `−√(c_{t−1}+ε)/√(b_t+ε)·g`.
/// `β` is read from `beta2`.
pub(super) fn adadelta(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Rms { b, c: Some(c) } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let (beta, eps) = (ctx.h().beta2, ctx.h().eps);
    let mut moved = 0.0;
    for (((wi, bi), ci), gi) in w.iter_mut().zip(b.iter_mut()).zip(c.iter_mut()).zip(g) {
        *bi = beta * *bi + (1.0 - beta) * gi * gi;
        let dw = -(*ci + eps).sqrt() / (*bi + eps).sqrt() * gi;
        *ci = beta * *ci + (1.0 - beta) * dw * dw;
        *wi += dw;
        moved += dw * dw;
    }
    let gn = norm(g);
    Ok(if gn > 0.0 { moved.sqrt() / gn } else { 0.0 })
}
