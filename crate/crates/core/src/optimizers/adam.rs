use super::{bias, mismatch, StepCtx};
use crate::error::Result;
use crate::param::{Hyperparameters, StateBuffers};

fn ema(m: &mut f64, beta: f64, x: f64) {
    *m = beta * *m + (1.0 - beta) * x;
}

pub(super) fn adam(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Moments { m, v } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let (lr, bc1, bc2) = (ctx.lr_t(), bias(h.beta1, ctx.t), bias(h.beta2, ctx.t));
    for i in 0..w.len() {
        ema(&mut m[i], h.beta1, g[i]);
        ema(&mut v[i], h.beta2, g[i] * g[i]);
        w[i] -= lr * (m[i] / bc1) / (v[i] / bc2 + h.eps).sqrt();
    }
    Ok(lr)
}

/// AdamNC: `β₂ₜ = 1 − 1/t`, constant `β₁ₜ = β₁`, no bias correction.
pub(super) fn adamnc(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Moments { m, v } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let lr = ctx.lr_t();
    let (b1, b2) = (adamnc_beta1(h, ctx.t), 1.0 - 1.0 / ctx.t as f64);
    for i in 0..w.len() {
        ema(&mut m[i], b1, g[i]);
        ema(&mut v[i], b2, g[i] * g[i]);
        w[i] -= lr * m[i] / (v[i] + h.eps).sqrt();
    }
    Ok(lr)
}

/// Time-varying first-moment rate; held constant.
fn adamnc_beta1(h: &Hyperparameters, _t: u64) -> f64 {
    h.beta1
}

pub(super) fn adamax(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Adamax { m, u } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let (lr, bc1) = (ctx.lr_t(), bias(h.beta1, ctx.t));
    for i in 0..w.len() {
        ema(&mut m[i], h.beta1, g[i]);
        u[i] = (h.beta2 * u[i]).max(g[i].abs());
        if u[i] > 0.0 {
            w[i] -= lr * (m[i] / bc1) / u[i];
        }
    }
    Ok(lr)
}

/// Nadam with constant `β₁`.
pub(super) fn nadam(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Moments { m, v } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let lr = ctx.lr_t();
    let c_m = h.beta1 / bias(h.beta1, ctx.t + 1);
    let c_g = (1.0 - h.beta1) / bias(h.beta1, ctx.t);
    let bc2 = bias(h.beta2, ctx.t);
    for i in 0..w.len() {
        ema(&mut m[i], h.beta1, g[i]);
        ema(&mut v[i], h.beta2, g[i] * g[i]);
        let m_hat = c_m * m[i] + c_g * g[i];
        w[i] -= lr * m_hat / (v[i] / bc2 + h.eps).sqrt();
    }
    Ok(lr)
}

pub(super) fn adamw(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Moments { m, v } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    adamw_update(ctx, m, v, w, g);
    Ok(ctx.lr_t())
}

/// `w ← w − mult·(η·m̂/√(v̂+ε) + λw)` on aligned slices. Muon reuses this for
/// its non-matrix tensors.
pub(super) fn adamw_update(ctx: &StepCtx<'_>, m: &mut [f64], v: &mut [f64], w: &mut [f64], g: &[f64]) {
    let h = ctx.h();
    let (lr, bc1, bc2) = (ctx.lr_t(), bias(h.beta1, ctx.t), bias(h.beta2, ctx.t));
    let decay = if h.paper_literal_decay_sign {
        -ctx.mult * h.weight_decay
    } else {
        ctx.mult * h.weight_decay
    };
    for i in 0..w.len() {
        ema(&mut m[i], h.beta1, g[i]);
        ema(&mut v[i], h.beta2, g[i] * g[i]);
        w[i] -= lr * (m[i] / bc1) / (v[i] / bc2 + h.eps).sqrt() + decay * w[i];
    }
}

/// AMSgrad without debiasing: `w ← w − η·m/(√v̂ + ε)`, `v̂ = max(v̂, v)`.
pub(super) fn amsgrad(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Amsgrad { m, v, v_max } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let lr = ctx.lr_t();
    for i in 0..w.len() {
        ema(&mut m[i], h.beta1, g[i]);
        ema(&mut v[i], h.beta2, g[i] * g[i]);
        v_max[i] = v_max[i].max(v[i]);
        w[i] -= lr * m[i] / (v_max[i].sqrt() + h.eps);
    }
    Ok(lr)
}

/// `ρ_t = ρ∞ − 2tβ₂ᵗ/(1 − β₂ᵗ)` with `ρ∞ = 2/(1 − β₂) − 1`.
pub fn radam_rho(t: u64, beta2: f64) -> f64 {
    let rho_inf = 2.0 / (1.0 - beta2) - 1.0;
    let tf = t as f64;
    let pow = (tf * beta2.ln()).exp();
    rho_inf - 2.0 * tf * pow / bias(beta2, t)
}

/// Variance rectifier `r_t`, or `None` on steps where `ρ_t ≤ 4` and the
/// un-adapted update applies. Evaluated in log space.
pub fn radam_rectifier(t: u64, beta2: f64) -> Option<f64> {
    let rho = radam_rho(t, beta2);
    if !(rho > 4.0) {
        return None;
    }
    let rho_inf = 2.0 / (1.0 - beta2) - 1.0;
    let log_r = 0.5
        * ((rho - 4.0).ln() + (rho - 2.0).ln() + rho_inf.ln()
            - (rho_inf - 4.0).ln()
            - (rho_inf - 2.0).ln()
            - rho.ln());
    Some(log_r.exp())
}

pub(super) fn radam(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Moments { m, v } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let (lr, bc1, bc2) = (ctx.lr_t(), bias(h.beta1, ctx.t), bias(h.beta2, ctx.t));
    let rect = radam_rectifier(ctx.t, h.beta2);
    for i in 0..w.len() {
        ema(&mut m[i], h.beta1, g[i]);
        ema(&mut v[i], h.beta2, g[i] * g[i]);
        let m_hat = m[i] / bc1;
        match rect {
            Some(r) => {
                let v_hat = v[i] / bc2;
                if v_hat > 0.0 {
                    w[i] -= lr * r * m_hat / v_hat.sqrt();
                }
            }
            None => w[i] -= lr * m_hat,
        }
    }
    Ok(lr)
}

pub(super) fn adabelief(ctx: &StepCtx<'_>, buf: &mut StateBuffers, w: &mut [f64], g: &[f64]) -> Result<f64> {
    let StateBuffers::Belief { m, s } = buf else {
        return Err(mismatch(ctx.spec.id));
    };
    let h = ctx.h();
    let (lr, bc1, bc2) = (ctx.lr_t(), bias(h.beta1, ctx.t), bias(h.beta2, ctx.t));
    for i in 0..w.len() {
        ema(&mut m[i], h.beta1, g[i]);
        let dev = g[i] - m[i];
        s[i] = h.beta2 * s[i] + (1.0 - h.beta2) * dev * dev + h.eps;
        w[i] -= lr * (m[i] / bc1) / ((s[i] / bc2).sqrt() + h.eps);
    }
    Ok(lr)
}
