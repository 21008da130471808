use super::{check_gradient, mismatch, step_spec, GradientSource, RuleOutput, StepCtx};
use crate::error::Result;
use crate::kernels::norm;
use crate::param::{GradientEvaluation, OptimizerState, ParameterSet, StateBuffers};

/// Runs the inner optimizer on the fast weights; every `k`-th call moves the
/// slow weights toward them by `α` and resets the fast weights to the slow
/// ones.
pub(super) fn lookahead(
    ctx: &StepCtx<'_>,
    state: &OptimizerState,
    params: &ParameterSet,
    source: &dyn GradientSource,
) -> Result<RuleOutput> {
    let StateBuffers::Lookahead { slow, inner, counter } = &state.buffers else {
        return Err(mismatch(ctx.spec.id));
    };
    let inner_spec = ctx.spec.inner_spec()?;
    let out = step_spec(inner_spec, inner, params, source)?;
    let h = ctx.h();
    let mut slow = slow.clone().unwrap_or_else(|| params.values().to_vec());
    let mut weights = out.weights;
    let mut counter = counter + 1;
    if counter >= h.k {
        for (phi, theta) in slow.iter_mut().zip(weights.iter_mut()) {
            *phi += h.alpha * (*theta - *phi);
            *theta = *phi;
        }
        counter = 0;
    }
    Ok(RuleOutput {
        weights,
        state: OptimizerState {
            id: state.id,
            step_count: state.step_count + 1,
            buffers: StateBuffers::Lookahead {
                slow: Some(slow),
                inner: Box::new(out.state),
                counter,
            },
        },
        effective_lr: out.effective_lr,
        loss: out.loss,
        grad_norm: out.grad_norm,
    })
}

/// Serves gradients at `x + ε`, optionally adding `λ·x`.
struct Perturbed<'a> {
    inner: &'a dyn GradientSource,
    offset: Option<Vec<f64>>,
    decay: f64,
}

impl Perturbed<'_> {
    fn shift(&self, x: &[f64]) -> Vec<f64> {
        match &self.offset {
            Some(e) => x.iter().zip(e).map(|(a, b)| a + b).collect(),
            None => x.to_vec(),
        }
    }
}

impl GradientSource for Perturbed<'_> {
    fn gradient(&self, x: &[f64]) -> Result<GradientEvaluation> {
        let mut eval = self.inner.gradient(&self.shift(x))?;
        if self.decay != 0.0 {
            for (gi, xi) in eval.gradient.iter_mut().zip(x) {
                *gi += self.decay * xi;
            }
        }
        Ok(eval)
    }

    fn hvp(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.inner.hvp(&self.shift(x), u)
    }

    fn hessian_diag(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner.hessian_diag(&self.shift(x))
    }

    fn evaluations(&self) -> usize {
        self.inner.evaluations()
    }
}

/// SAM perturbs along `σ·g/‖g‖`; ASAM along `σ·T²g/‖Tg‖` with `T = diag(|w|)`
/// and adds `λw` to the perturbed gradient. A zero denominator skips the
/// perturbation.
pub(super) fn sam(
    ctx: &StepCtx<'_>,
    state: &OptimizerState,
    params: &ParameterSet,
    source: &dyn GradientSource,
    adaptive: bool,
) -> Result<RuleOutput> {
    let StateBuffers::Sharpness { base } = &state.buffers else {
        return Err(mismatch(ctx.spec.id));
    };
    let w = params.values();
    let eval = source.gradient(w)?;
    check_gradient(&eval, ctx.t)?;
    let g = &eval.gradient;
    let sigma = ctx.h().sigma;
    let eps = sharpness_perturbation(w, g, sigma, adaptive);
    let offset = eps.iter().any(|e| *e != 0.0).then_some(eps);
    let perturbed = Perturbed {
        inner: source,
        offset,
        decay: if adaptive { ctx.h().weight_decay } else { 0.0 },
    };
    let out = step_spec(ctx.spec.inner_spec()?, base, params, &perturbed)?;
    Ok(RuleOutput {
        weights: out.weights,
        state: OptimizerState {
            id: state.id,
            step_count: state.step_count + 1,
            buffers: StateBuffers::Sharpness {
                base: Box::new(out.state),
            },
        },
        effective_lr: out.effective_lr,
        loss: eval.loss,
        grad_norm: norm(g),
    })
}

/// `ε_t` for SAM or ASAM, exposed for property checks.
pub fn sharpness_perturbation(w: &[f64], g: &[f64], sigma: f64, adaptive: bool) -> Vec<f64> {
    let scaled: Vec<f64> = if adaptive {
        w.iter().zip(g).map(|(wi, gi)| wi.abs() * gi).collect()
    } else {
        g.to_vec()
    };
    let n = norm(&scaled);
    if n == 0.0 {
        return vec![0.0; w.len()];
    }
    if adaptive {
        w.iter().zip(g).map(|(wi, gi)| sigma * wi * wi * gi / n).collect()
    } else {
        g.iter().map(|gi| sigma * gi / n).collect()
    }
}
