//! Single benchmark runs.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::RunConfig;
use super::problem::{build_problem, initial_point};
use super::trace::{self, TraceRecord};
use super::write_atomic;
use crate::error::{Error, Result};
use crate::optimizers::ProblemSource;
use crate::param::ParameterSet;
use crate::problems::Problem;

/// Where and why a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub step: u64,
    pub reason: String,
}

/// End-of-run summary. Everything except `wall_time_s` is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub optimizer: String,
    pub problem: String,
    pub steps_requested: u64,
    pub steps_completed: u64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub best_loss: f64,
    /// Loss at the known minimizer, when there is one.
    pub optimal_loss: Option<f64>,
    pub threshold: f64,
    /// First step whose loss gap (or loss, without a known minimum) is at or
    /// below `threshold`.
    pub steps_to_threshold: Option<u64>,
    /// `‖w − w*‖₂` at the end, when the minimizer is known.
    pub final_distance: Option<f64>,
    pub diverged: Option<Divergence>,
    pub wall_time_s: f64,
}

impl RunSummary {
    pub fn render_text(&self) -> String {
        let opt = |v: Option<u64>| v.map_or_else(|| "not reached".to_string(), |s| s.to_string());
        let mut lines = vec![
            format!("run {} ({} on {})", self.name, self.optimizer, self.problem),
            format!("  steps             {}/{}", self.steps_completed, self.steps_requested),
            format!("  final loss        {:.6e}", self.final_loss),
            format!("  best loss         {:.6e}", self.best_loss),
            format!("  steps to {:.0e}    {}", self.threshold, opt(self.steps_to_threshold)),
        ];
        if let Some(d) = self.final_distance {
            lines.push(format!("  distance to w*    {d:.6e}"));
        }
        if let Some(d) = &self.diverged {
            lines.push(format!("  DIVERGED at step {}: {}", d.step, d.reason));
        }
        lines.join("\n")
    }
}

/// Result of an in-memory run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<TraceRecord>,
    pub summary: RunSummary,
    pub final_params: ParameterSet,
}

impl RunOutcome {
    pub fn diverged(&self) -> bool {
        self.summary.diverged.is_some()
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Run a config against an already-built problem.
pub fn simulate(cfg: &RunConfig, problem: &dyn Problem) -> Result<RunOutcome> {
    let started = Instant::now();
    let optimizer = cfg.optimizer.optimizer()?;
    let layout = problem.layout().clone();
    let mut params = ParameterSet::unflatten(layout.clone(), initial_point(&cfg.problem, problem)?)?;
    let mut state = optimizer.init_state(&layout)?;

    let minimizer = problem.minimizer();
    let optimal_loss = minimizer.as_ref().map(|m| problem.loss(m, None)).transpose()?;
    let gap = |loss: f64| optimal_loss.map_or(loss, |l| loss - l);
    let initial_loss = problem.loss(params.values(), None)?;
    let limit = cfg.divergence_factor * initial_loss.abs().max(1.0);

    let mut records = Vec::new();
    let mut pending: Option<TraceRecord> = None;
    let mut best = initial_loss;
    let mut final_loss = initial_loss;
    let mut reached = (gap(initial_loss) <= cfg.threshold).then_some(0);
    let mut diverged = None;
    let mut completed = 0;

    for t in 1..=cfg.steps {
        let batch = problem.is_stochastic().then(|| t - 1);
        let source = ProblemSource::new(problem, batch);
        let out = match optimizer.step(&state, &params, &source) {
            Ok(out) => out,
            Err(e @ (Error::NonFiniteGradient { .. } | Error::NonFiniteUpdate { .. })) => {
                diverged = Some(Divergence {
                    step: t,
                    reason: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let loss = problem.loss(out.new_params.values(), None)?;
        let rec = TraceRecord {
            t,
            loss: out.loss,
            grad_norm: out.grad_norm,
            update_norm: out.update_norm,
            effective_lr: out.effective_lr,
            extra_evals: out.extra_evals,
        };
        if !loss.is_finite() || loss.abs() > limit || !rec.is_finite() {
            diverged = Some(Divergence {
                step: t,
                reason: format!("loss {loss:e} exceeds the divergence limit {limit:e}"),
            });
            break;
        }
        params = out.new_params;
        state = out.new_state;
        completed = t;
        final_loss = loss;
        best = best.min(loss);
        if reached.is_none() && gap(loss) <= cfg.threshold {
            reached = Some(t);
        }
        if t % cfg.log_every == 0 {
            records.push(rec);
            pending = None;
        } else {
            pending = Some(rec);
        }
    }
    // The last finite step is always logged.
    records.extend(pending);

    let summary = RunSummary {
        name: cfg.name.clone(),
        optimizer: cfg.optimizer.id.to_string(),
        problem: problem.name().to_string(),
        steps_requested: cfg.steps,
        steps_completed: completed,
        initial_loss,
        final_loss,
        best_loss: best,
        optimal_loss,
        threshold: cfg.threshold,
        steps_to_threshold: reached,
        final_distance: minimizer.as_ref().map(|m| distance(params.values(), m)),
        diverged,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome {
        records,
        summary,
        final_params: params,
    })
}

/// Build the problem and run in memory.
pub fn run_in_memory(cfg: &RunConfig) -> Result<RunOutcome> {
    let problem = build_problem(&cfg.problem)?;
    simulate(cfg, problem.as_ref())
}

pub(crate) fn summary_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary serializes");
    s.push('\n');
    s
}

fn write_outputs(cfg: &RunConfig, outcome: &RunOutcome) -> Result<()> {
    write_atomic(&cfg.trace_path, trace::render(&outcome.records).as_bytes())?;
    write_atomic(&cfg.summary_path, summary_json(&outcome.summary).as_bytes())
}

/// Run, then write the trace and summary files atomically.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    let outcome = run_in_memory(cfg)?;
    write_outputs(cfg, &outcome)?;
    Ok(outcome)
}

/// Load a config file with overrides and execute it.
pub fn execute_path(path: &Path, overrides: &[String]) -> Result<RunOutcome> {
    execute(&RunConfig::load(path, overrides)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::parse(text).unwrap()
    }

    #[test]
    fn sgd_contracts_identity_quadratic() {
        let c = cfg("optimizer.id = sgd\noptimizer.lr = 0.5\nproblem.name = quadratic\nproblem.dim = 3\nrun.steps = 100");
        let out = run_in_memory(&c).unwrap();
        assert!(out.summary.final_loss < 1e-10);
        assert!(out.summary.diverged.is_none());
        assert_eq!(out.records.len(), 100);
        // w_t = 0.5^t, so L(w_t) = 1.5 * 0.25^t.
        assert_eq!(out.summary.steps_to_threshold, Some(11));
        for r in &out.records {
            let expected = 1.5 * 0.25f64.powi(r.t as i32 - 1);
            assert!((r.loss - expected).abs() <= 1e-15 * expected, "{r:?}");
        }
    }

    #[test]
    fn large_lr_diverges_and_truncates() {
        let c = cfg("optimizer.id = sgd\noptimizer.lr = 2.5\nproblem.name = quadratic\nrun.steps = 1000");
        let out = run_in_memory(&c).unwrap();
        let d = out.summary.diverged.clone().unwrap();
        // |w_t| = 1.5^t and L = 1.5^(2t); 2.25^t > 1e10 first at t = 29.
        assert_eq!(d.step, 29);
        assert_eq!(out.summary.steps_completed, 28);
        assert_eq!(out.records.last().unwrap().t, 28);
        assert!(out.records.iter().all(TraceRecord::is_finite));
    }

    #[test]
    fn log_every_keeps_final_step() {
        let c = cfg("optimizer.id = adam\nproblem.name = quadratic\nrun.steps = 10\nrun.log_every = 4");
        let ts: Vec<u64> = run_in_memory(&c).unwrap().records.iter().map(|r| r.t).collect();
        assert_eq!(ts, [4, 8, 10]);
        let c = cfg("optimizer.id = adam\nproblem.name = quadratic\nrun.steps = 8\nrun.log_every = 4");
        let ts: Vec<u64> = run_in_memory(&c).unwrap().records.iter().map(|r| r.t).collect();
        assert_eq!(ts, [4, 8]);
    }

    #[test]
    fn stochastic_runs_are_reproducible() {
        let text = "optimizer.id = sophia\nproblem.name = logistic\nproblem.batch_size = 16\nrun.steps = 30\nrun.seed = 3";
        let a = run_in_memory(&cfg(text)).unwrap();
        let b = run_in_memory(&cfg(text)).unwrap();
        assert_eq!(trace::render(&a.records), trace::render(&b.records));
        assert!(a.records.iter().all(|r| r.extra_evals > 0 || r.t % 10 != 1));
    }

    #[test]
    fn summary_is_json() {
        let out = run_in_memory(&cfg("optimizer.id = sgd\noptimizer.lr = 1e-4\nproblem.name = rosenbrock\nrun.steps = 5")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&summary_json(&out.summary)).unwrap();
        assert_eq!(v["steps_completed"], 5);
        assert_eq!(v["optimal_loss"], 0.0);
        assert!(v["diverged"].is_null());
    }
}
