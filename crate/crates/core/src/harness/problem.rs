//! Building problems from `problem.*` config keys.
//!
//! | name              | keys                                                  |
//! |-------------------|-------------------------------------------------------|
//! | `quadratic`       | `dim` (2), `diag`, `b`, `layout`, `start` (all ones)  |
//! | `spd_quadratic`   | `dim` (10), `condition` (10), `seed` (0), `layout`    |
//! | `noisy_quadratic` | as `spd_quadratic` plus `noise` (0.1)                 |
//! | `rosenbrock`      | `dim` (2)                                             |
//! | `logistic`        | `csv` (bundled data), `l2` (0), `batch_size`, `seed`  |
//!
//! Every problem also accepts `start`, a comma-separated initial point.
//! `layout` relabels the coordinates, e.g. `W:2x4,b:2,s:scalar`.

use std::path::PathBuf;
use std::sync::Arc;

use super::config::{parse_list, parse_value, ProblemConfig};
use crate::error::{Error, Result};
use crate::param::{ParameterLayout, TensorSpec};
use crate::problems::{DatasetTable, LogisticProblem, NoisyQuadratic, Problem, QuadraticProblem, RosenbrockProblem};

/// Names accepted by `problem.name`.
pub const PROBLEM_NAMES: &[&str] = &["quadratic", "spd_quadratic", "noisy_quadratic", "rosenbrock", "logistic"];

/// Parse `name:shape` entries; a shape is `RxC`, `N` or `scalar`.
pub fn parse_layout(text: &str) -> Result<ParameterLayout> {
    let mut entries = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, shape) = item
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("layout entry `{item}` is not name:shape")))?;
        let (name, shape) = (name.trim(), shape.trim());
        let bad = || Error::Config(format!("layout entry `{item}` has a bad shape"));
        let spec = if shape == "scalar" {
            TensorSpec::scalar(name)
        } else if let Some((r, c)) = shape.split_once('x') {
            let r: usize = r.trim().parse().map_err(|_| bad())?;
            let c: usize = c.trim().parse().map_err(|_| bad())?;
            TensorSpec::matrix(name, r, c)
        } else {
            TensorSpec::vector(name, shape.parse().map_err(|_| bad())?)
        };
        entries.push(spec);
    }
    ParameterLayout::new(entries)
}

fn allowed(cfg: &ProblemConfig, keys: &[&str]) -> Result<()> {
    match cfg.params.keys().find(|k| *k != "start" && !keys.contains(&k.as_str())) {
        Some(k) => Err(Error::Config(format!("problem.{k} does not apply to `{}`", cfg.name))),
        None => Ok(()),
    }
}

fn num<T: std::str::FromStr>(cfg: &ProblemConfig, key: &str, default: T) -> Result<T> {
    cfg.get(key)
        .map_or(Ok(default), |v| parse_value(&format!("problem.{key}"), v))
}

fn relabel(q: QuadraticProblem, cfg: &ProblemConfig) -> Result<QuadraticProblem> {
    match cfg.get("layout") {
        Some(text) => q.with_layout(Arc::new(parse_layout(text)?)),
        None => Ok(q),
    }
}

fn spd(cfg: &ProblemConfig) -> Result<QuadraticProblem> {
    let q = QuadraticProblem::random_spd(num(cfg, "dim", 10)?, num(cfg, "condition", 10.0)?, num(cfg, "seed", 0)?)?;
    relabel(q, cfg)
}

fn csv_path(cfg: &ProblemConfig, raw: &str) -> PathBuf {
    let p = PathBuf::from(raw);
    match (&cfg.base_dir, p.is_relative()) {
        (Some(base), true) if !p.exists() => base.join(p),
        _ => p,
    }
}

/// Construct the problem a config names.
pub fn build_problem(cfg: &ProblemConfig) -> Result<Box<dyn Problem>> {
    let problem: Box<dyn Problem> = match cfg.name.as_str() {
        "quadratic" => {
            allowed(cfg, &["dim", "diag", "b", "layout"])?;
            let diag: Vec<f64> = match cfg.get("diag") {
                Some(v) => parse_list("problem.diag", v)?,
                None => vec![1.0; num(cfg, "dim", 2usize)?],
            };
            if cfg.get("diag").is_some() && cfg.get("dim").is_some_and(|d| d.parse() != Ok(diag.len())) {
                return Err(Error::Config("problem.dim disagrees with problem.diag".into()));
            }
            let b = match cfg.get("b") {
                Some(v) => parse_list("problem.b", v)?,
                None => vec![0.0; diag.len()],
            };
            let n = diag.len();
            let q = QuadraticProblem::diagonal(&diag, &b)?.with_start(vec![1.0; n])?;
            Box::new(relabel(q, cfg)?)
        }
        "spd_quadratic" => {
            allowed(cfg, &["dim", "condition", "seed", "layout"])?;
            Box::new(spd(cfg)?.with_name("spd_quadratic"))
        }
        "noisy_quadratic" => {
            allowed(cfg, &["dim", "condition", "seed", "layout", "noise"])?;
            Box::new(NoisyQuadratic::new(spd(cfg)?, num(cfg, "noise", 0.1)?, num(cfg, "seed", 0)?)?)
        }
        "rosenbrock" => {
            allowed(cfg, &["dim"])?;
            Box::new(RosenbrockProblem::new(num(cfg, "dim", 2)?)?)
        }
        "logistic" => {
            allowed(cfg, &["csv", "l2", "batch_size", "seed"])?;
            let data = match cfg.get("csv") {
                Some(raw) => {
                    let path = csv_path(cfg, raw);
                    if !path.is_file() {
                        return Err(Error::Config(format!("problem.csv `{}` does not exist", path.display())));
                    }
                    DatasetTable::from_csv_path(path)?
                }
                None => DatasetTable::bundled(),
            };
            let mut p = LogisticProblem::new(data, num(cfg, "l2", 0.0)?)?;
            if let Some(bs) = cfg.get("batch_size") {
                p = p.with_batches(parse_value("problem.batch_size", bs)?, num(cfg, "seed", 0)?)?;
            }
            Box::new(p)
        }
        other => {
            return Err(Error::Config(format!(
                "unknown problem `{other}` (expected one of {})",
                PROBLEM_NAMES.join(", ")
            )))
        }
    };
    initial_point(cfg, problem.as_ref())?;
    Ok(problem)
}

/// `problem.start` if given, else the problem's own starting point.
pub fn initial_point(cfg: &ProblemConfig, problem: &dyn Problem) -> Result<Vec<f64>> {
    let Some(raw) = cfg.get("start") else {
        return Ok(problem.initial_point());
    };
    let start: Vec<f64> = parse_list("problem.start", raw)?;
    let n = problem.layout().len();
    match start.len() {
        1 => Ok(vec![start[0]; n]),
        len if len == n => Ok(start),
        len => Err(Error::Config(format!("problem.start has {len} values, expected {n}"))),
    }
}
