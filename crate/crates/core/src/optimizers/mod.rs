//! The update rules as uniform steppers.
//!
//! Every optimizer is driven the same way: [`Optimizer::step`] takes the
//! current state, the current weights and a [`GradientSource`], and returns a
//! [`StepOutcome`] holding the next weights and state. Inputs are never
//! mutated, so a rejected step leaves the caller's state untouched.
//!
//! Most rules need exactly one gradient at `w_t`. NAG asks for the gradient at
//! its lookahead point instead, SAM/ASAM ask for a second gradient at the
//! perturbed point, and Sophia asks for Hessian-vector products on refresh
//! steps; all of them go through the same source, which counts evaluations.

mod adam;
mod adaptive;
mod classic;
mod layerwise;
mod modern;
mod ranger21;
mod wrappers;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::param::{GradientEvaluation, Hyperparameters, OptimizerState, ParameterLayout, ParameterSet};
use crate::problems::{fd_hvp, Problem, DEFAULT_FD_STEP};
use crate::schedules::ScheduleSpec;

pub use adam::{radam_rectifier, radam_rho};
pub use wrappers::sharpness_perturbation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptimizerId {
    Sgd,
    Momentum,
    Nag,
    Adagrad,
    Rmsprop,
    Adadelta,
    Adam,
    Adamax,
    Nadam,
    Adamw,
    Adafactor,
    Amsgrad,
    Adamnc,
    Radam,
    Lamb,
    Lookahead,
    Adabelief,
    Sam,
    Asam,
    Ranger21,
    Adan,
    Lion,
    Sophia,
    Muon,
}

/// Registry row: display name, year introduced, config id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimizerInfo {
    pub name: &'static str,
    pub year: u16,
    pub id: OptimizerId,
}

impl OptimizerId {
    /// Chronological order.
    pub const ALL: [OptimizerId; 24] = [
        OptimizerId::Sgd,
        OptimizerId::Momentum,
        OptimizerId::Nag,
        OptimizerId::Adagrad,
        OptimizerId::Rmsprop,
        OptimizerId::Adadelta,
        OptimizerId::Adam,
        OptimizerId::Adamax,
        OptimizerId::Nadam,
        OptimizerId::Adamw,
        OptimizerId::Adafactor,
        OptimizerId::Amsgrad,
        OptimizerId::Adamnc,
        OptimizerId::Radam,
        OptimizerId::Lamb,
        OptimizerId::Lookahead,
        OptimizerId::Adabelief,
        OptimizerId::Sam,
        OptimizerId::Asam,
        OptimizerId::Ranger21,
        OptimizerId::Adan,
        OptimizerId::Lion,
        OptimizerId::Sophia,
        OptimizerId::Muon,
    ];

    pub fn as_str(self) -> &'static str {
        self.info().0
    }

    fn info(self) -> (&'static str, &'static str, u16) {
        use OptimizerId::*;
        match self {
            Sgd => ("sgd", "SGD", 1951),
            Momentum => ("momentum", "Momentum", 1964),
            Nag => ("nag", "NAG", 1983),
            Adagrad => ("adagrad", "Adagrad", 2011),
            Rmsprop => ("rmsprop", "RMSprop", 2012),
            Adadelta => ("adadelta", "Adadelta", 2012),
            Adam => ("adam", "Adam", 2014),
            Adamax => ("adamax", "Adamax", 2015),
            Nadam => ("nadam", "Nadam", 2016),
            Adamw => ("adamw", "AdamW", 2017),
            Adafactor => ("adafactor", "Adafactor", 2018),
            Amsgrad => ("amsgrad", "AMSgrad", 2018),
            Adamnc => ("adamnc", "AdamNC", 2018),
            Radam => ("radam", "Radam", 2019),
            Lamb => ("lamb", "LAMB", 2019),
            Lookahead => ("lookahead", "Lookahead", 2019),
            Adabelief => ("adabelief", "Adabelief", 2020),
            Sam => ("sam", "SAM", 2020),
            Asam => ("asam", "ASAM", 2021),
            Ranger21 => ("ranger21", "Ranger21", 2021),
            Adan => ("adan", "Adan", 2022),
            Lion => ("lion", "Lion", 2023),
            Sophia => ("sophia", "Sophia", 2023),
            Muon => ("muon", "Muon", 2024),
        }
    }

    pub fn registry_entry(self) -> OptimizerInfo {
        let (_, name, year) = self.info();
        OptimizerInfo { name, year, id: self }
    }

    /// Lookahead, SAM and ASAM drive another optimizer.
    pub fn is_wrapper(self) -> bool {
        matches!(self, OptimizerId::Lookahead | OptimizerId::Sam | OptimizerId::Asam)
    }
}

/// The chronological registry.
pub fn registry() -> Vec<OptimizerInfo> {
    OptimizerId::ALL.iter().map(|id| id.registry_entry()).collect()
}

impl fmt::Display for OptimizerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        OptimizerId::ALL
            .into_iter()
            .find(|id| id.as_str() == key)
            .ok_or_else(|| Error::UnknownOptimizer(s.to_string()))
    }
}

/// An optimizer id with its hyperparameters and learning-rate schedule.
/// Wrappers (`lookahead`, `sam`, `asam`) carry the spec of the optimizer
/// they drive in `inner`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSpec {
    pub id: OptimizerId,
    pub hyper: Hyperparameters,
    pub schedule: ScheduleSpec,
    pub inner: Option<Box<OptimizerSpec>>,
    /// Seeds Sophia's Hutchinson probes.
    pub seed: u64,
}

impl OptimizerSpec {
    /// Published defaults and a constant schedule. Wrappers drive SGD.
    pub fn with_defaults(id: OptimizerId) -> Self {
        let inner = id
            .is_wrapper()
            .then(|| Box::new(OptimizerSpec::with_defaults(OptimizerId::Sgd)));
        Self {
            id,
            hyper: Hyperparameters::defaults_for(id),
            schedule: ScheduleSpec::constant(),
            inner,
            seed: 0,
        }
    }

    pub fn wrapping(id: OptimizerId, inner: OptimizerSpec) -> Result<Self> {
        let mut spec = Self::with_defaults(id);
        if !id.is_wrapper() {
            return Err(Error::Config(format!("`{id}` does not wrap another optimizer")));
        }
        spec.inner = Some(Box::new(inner));
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_hyper(mut self, f: impl FnOnce(&mut Hyperparameters)) -> Self {
        f(&mut self.hyper);
        self
    }

    pub fn with_schedule(mut self, schedule: ScheduleSpec) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn inner_spec(&self) -> Result<&OptimizerSpec> {
        self.inner
            .as_deref()
            .ok_or_else(|| Error::Config(format!("`{}` needs an inner optimizer", self.id)))
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.schedule.validate()?;
        match (&self.inner, self.id.is_wrapper()) {
            (Some(inner), true) => {
                if inner.id.is_wrapper() {
                    return Err(Error::Config(format!(
                        "`{}` cannot wrap another wrapper (`{}`)",
                        self.id, inner.id
                    )));
                }
                inner.validate()
            }
            (None, true) => Err(Error::Config(format!("`{}` needs an inner optimizer", self.id))),
            (Some(_), false) => Err(Error::Config(format!("`{}` does not take an inner optimizer", self.id))),
            (None, false) => Ok(()),
        }
    }

    pub fn optimizer(&self) -> Result<Optimizer> {
        Optimizer::new(self.clone())
    }
}

/// Supplies gradients (and curvature) to a stepper.
pub trait GradientSource: Sync {
    fn gradient(&self, w: &[f64]) -> Result<GradientEvaluation>;

    /// `∇²L(w)·u`.
    fn hvp(&self, w: &[f64], u: &[f64]) -> Result<Vec<f64>>;

    /// Exact Hessian diagonal, if the source can provide one.
    fn hessian_diag(&self, w: &[f64]) -> Option<Vec<f64>>;

    /// Gradient and Hessian-vector evaluations served so far.
    fn evaluations(&self) -> usize;
}

/// A [`Problem`] fixed at one batch, counting the evaluations it serves.
pub struct ProblemSource<'a> {
    problem: &'a dyn Problem,
    batch: Option<u64>,
    count: AtomicUsize,
}

impl<'a> ProblemSource<'a> {
    pub fn new(problem: &'a dyn Problem, batch: Option<u64>) -> Self {
        Self {
            problem,
            batch,
            count: AtomicUsize::new(0),
        }
    }
}

impl GradientSource for ProblemSource<'_> {
    fn gradient(&self, w: &[f64]) -> Result<GradientEvaluation> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.problem.evaluate(w, self.batch)
    }

    fn hvp(&self, w: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.count.fetch_add(1, Ordering::Relaxed);
        match self.problem.hvp(w, u, self.batch) {
            Some(hu) => Ok(hu),
            None => fd_hvp(self.problem, w, u, DEFAULT_FD_STEP, self.batch),
        }
    }

    fn hessian_diag(&self, w: &[f64]) -> Option<Vec<f64>> {
        self.problem.exact_hessian_diag(w)
    }

    fn evaluations(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }
}

/// A gradient closure `w ↦ (loss, ∇L(w))`. Hessian-vector products fall back
/// to central differences of the closure.
pub struct FnSource<F> {
    f: F,
    count: AtomicUsize,
}

impl<F> FnSource<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    pub fn new(f: F) -> Self {
        Self {
            f,
            count: AtomicUsize::new(0),
        }
    }
}

impl<F> GradientSource for FnSource<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    fn gradient(&self, w: &[f64]) -> Result<GradientEvaluation> {
        self.count.fetch_add(1, Ordering::Relaxed);
        let (loss, g) = (self.f)(w);
        if g.len() != w.len() {
            return Err(Error::LengthMismatch {
                expected: w.len(),
                actual: g.len(),
            });
        }
        Ok(GradientEvaluation::new(loss, g))
    }

    fn hvp(&self, w: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.count.fetch_add(1, Ordering::Relaxed);
        let r = DEFAULT_FD_STEP;
        let shifted = |s: f64| -> Vec<f64> { w.iter().zip(u).map(|(a, b)| a + s * b).collect() };
        let (_, gp) = (self.f)(&shifted(r));
        let (_, gm) = (self.f)(&shifted(-r));
        Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * r)).collect())
    }

    fn hessian_diag(&self, _w: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn evaluations(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub new_params: ParameterSet,
    pub new_state: OptimizerState,
    /// `‖w' − w‖₂`.
    pub update_norm: f64,
    /// Global step size applied this step: base rate times schedule for
    /// η-driven rules, the relative rate for Adafactor, and `‖Δw‖/‖g‖` for
    /// Adadelta, which has no learning rate.
    pub effective_lr: f64,
    /// Evaluations beyond the first one (perturbed gradients, Hessian probes).
    pub extra_evals: usize,
    /// Loss of the primary evaluation (at the lookahead point for NAG).
    pub loss: f64,
    /// `‖g‖₂` of the primary evaluation.
    pub grad_norm: f64,
}

/// What a rule implementation hands back to the dispatcher.
pub(crate) struct RuleOutput {
    pub weights: Vec<f64>,
    pub state: OptimizerState,
    pub effective_lr: f64,
    pub loss: f64,
    pub grad_norm: f64,
}

/// Per-step context shared by every rule.
pub(crate) struct StepCtx<'a> {
    pub spec: &'a OptimizerSpec,
    pub layout: &'a ParameterLayout,
    pub t: u64,
    /// Schedule multiplier at `t`.
    pub mult: f64,
}

impl StepCtx<'_> {
    pub fn h(&self) -> &Hyperparameters {
        &self.spec.hyper
    }

    /// Base rate times schedule multiplier.
    pub fn lr_t(&self) -> f64 {
        self.spec.hyper.lr * self.mult
    }
}

/// A validated spec ready to step.
#[derive(Debug, Clone)]
pub struct Optimizer {
    spec: OptimizerSpec,
}

impl Optimizer {
    pub fn new(spec: OptimizerSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &OptimizerSpec {
        &self.spec
    }

    pub fn id(&self) -> OptimizerId {
        self.spec.id
    }

    pub fn init_state(&self, layout: &ParameterLayout) -> Result<OptimizerState> {
        OptimizerState::init(&self.spec, layout)
    }

    /// Advance one step from `(state, params)`, drawing gradients from
    /// `source`.
    pub fn step(
        &self,
        state: &OptimizerState,
        params: &ParameterSet,
        source: &dyn GradientSource,
    ) -> Result<StepOutcome> {
        let before = source.evaluations();
        let out = step_spec(&self.spec, state, params, source)?;
        let used = source.evaluations() - before;
        let update_norm = params
            .values()
            .iter()
            .zip(&out.weights)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        Ok(StepOutcome {
            new_params: params.with_values(out.weights)?,
            new_state: out.state,
            update_norm,
            effective_lr: out.effective_lr,
            extra_evals: used.saturating_sub(1),
            loss: out.loss,
            grad_norm: out.grad_norm,
        })
    }
}

/// Dispatch on the spec id. Used recursively by the wrappers.
pub(crate) fn step_spec(
    spec: &OptimizerSpec,
    state: &OptimizerState,
    params: &ParameterSet,
    source: &dyn GradientSource,
) -> Result<RuleOutput> {
    if state.id != spec.id {
        return Err(Error::StateMismatch(spec.id.as_str()));
    }
    let t = state.step();
    let ctx = StepCtx {
        spec,
        layout: params.layout(),
        t,
        mult: spec.schedule.eta_at(t),
    };
    let w = params.values();
    use OptimizerId::*;
    let out = match spec.id {
        Nag => classic::nag(&ctx, state, w, source)?,
        Lookahead => wrappers::lookahead(&ctx, state, params, source)?,
        Sam => wrappers::sam(&ctx, state, params, source, false)?,
        Asam => wrappers::sam(&ctx, state, params, source, true)?,
        Sophia => modern::sophia(&ctx, state, w, source)?,
        _ => {
            let eval = source.gradient(w)?;
            check_gradient(&eval, t)?;
            let g = &eval.gradient;
            let mut next = state.clone();
            let mut weights = w.to_vec();
            let effective_lr = match spec.id {
                Sgd => classic::sgd(&ctx, &mut weights, g),
                Momentum => classic::momentum(&ctx, &mut next.buffers, &mut weights, g)?,
                Adagrad => adaptive::adagrad(&ctx, &mut next.buffers, &mut weights, g)?,
                Rmsprop => adaptive::rmsprop(&ctx, &mut next.buffers, &mut weights, g)?,
                Adadelta => adaptive::adadelta(&ctx, &mut next.buffers, &mut weights, g)?,
                Adam => adam::adam(&ctx, &mut next.buffers, &mut weights, g)?,
                Adamnc => adam::adamnc(&ctx, &mut next.buffers, &mut weights, g)?,
                Adamax => adam::adamax(&ctx, &mut next.buffers, &mut weights, g)?,
                Nadam => adam::nadam(&ctx, &mut next.buffers, &mut weights, g)?,
                Adamw => adam::adamw(&ctx, &mut next.buffers, &mut weights, g)?,
                Amsgrad => adam::amsgrad(&ctx, &mut next.buffers, &mut weights, g)?,
                Radam => adam::radam(&ctx, &mut next.buffers, &mut weights, g)?,
                Adabelief => adam::adabelief(&ctx, &mut next.buffers, &mut weights, g)?,
                Adafactor => layerwise::adafactor(&ctx, &mut next.buffers, &mut weights, g)?,
                Lamb => layerwise::lamb(&ctx, &mut next.buffers, &mut weights, g)?,
                Ranger21 => ranger21::ranger21(&ctx, &mut next.buffers, &mut weights, g)?,
                Adan => modern::adan(&ctx, &mut next.buffers, &mut weights, g)?,
                Lion => modern::lion(&ctx, &mut next.buffers, &mut weights, g)?,
                Muon => modern::muon(&ctx, &mut next.buffers, &mut weights, g)?,
                Nag | Lookahead | Sam | Asam | Sophia => unreachable!("dispatched above"),
            };
            next.step_count += 1;
            RuleOutput {
                weights,
                state: next,
                effective_lr,
                loss: eval.loss,
                grad_norm: crate::kernels::norm(g),
            }
        }
    };
    if let Some(index) = out.weights.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteUpdate { step: t, index });
    }
    Ok(out)
}

pub(crate) fn check_gradient(eval: &GradientEvaluation, step: u64) -> Result<()> {
    if let Some(index) = eval.first_non_finite() {
        return Err(Error::NonFiniteGradient { step, index });
    }
    if !eval.loss.is_finite() {
        return Err(Error::NonFiniteGradient { step, index: usize::MAX });
    }
    Ok(())
}

pub(crate) fn mismatch(id: OptimizerId) -> Error {
    Error::StateMismatch(id.as_str())
}

/// Bias-correction denominator `1 − βᵗ`.
pub(crate) fn bias(beta: f64, t: u64) -> f64 {
    -((t as f64) * beta.ln()).exp_m1()
}
