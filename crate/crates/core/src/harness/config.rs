//! Flat `key = value` run configs.
//!
//! ```text
//! # comments start with '#'
//! optimizer.id = adam
//! optimizer.lr = 0.01
//! schedule.kind = cosine
//! problem.name = spd_quadratic
//! problem.dim = 10
//! run.steps = 500
//! ```
//!
//! A `[section]` line prefixes the keys that follow it. For wrapper
//! optimizers the `inner.*` keys configure the driven optimizer and the
//! `schedule.*` keys apply to it.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::optimizers::{OptimizerId, OptimizerSpec};
use crate::param::{HessianEstimator, Hyperparameters};
use crate::schedules::ScheduleSpec;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "OPTBENCH_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "optbench-out";

/// Parsed `key = value` pairs in key order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
    source: Option<PathBuf>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{line}`", n + 1)))?;
            let key = match (section.is_empty(), k.trim()) {
                (_, "") => return Err(Error::Config(format!("line {}: empty key", n + 1))),
                (true, k) => k.to_string(),
                (false, k) => format!("{section}.{k}"),
            };
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", n + 1)));
            }
        }
        Ok(Self { entries, source: None })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        map.source = Some(path.to_path_buf());
        Ok(map)
    }

    /// Apply a `KEY=VALUE` override.
    pub fn set_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not KEY=VALUE")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("override `{assignment}` has an empty key")));
        }
        self.entries.insert(k.to_string(), v.trim().to_string());
        Ok(())
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    /// Entries under `prefix.` with the prefix stripped.
    pub fn section(&self, prefix: &str) -> BTreeMap<String, String> {
        let p = format!("{prefix}.");
        self.entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(&p).map(|s| (s.to_string(), v.clone())))
            .collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

pub(crate) fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

pub(crate) fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{value}`"))),
    }
}

/// Set a hyperparameter by its config name.
pub fn set_hyperparameter(h: &mut Hyperparameters, key: &str, value: &str) -> Result<()> {
    let f = |v: &str| parse_value::<f64>(key, v);
    match key {
        "lr" => h.lr = f(value)?,
        "momentum" => h.momentum = f(value)?,
        "beta0" => h.beta0 = f(value)?,
        "beta1" => h.beta1 = f(value)?,
        "beta2" => h.beta2 = f(value)?,
        "beta3" => h.beta3 = f(value)?,
        "eps" => h.eps = f(value)?,
        "eps1" => h.eps1 = f(value)?,
        "eps2" => h.eps2 = f(value)?,
        "eps_c" => h.eps_c = f(value)?,
        "weight_decay" => h.weight_decay = f(value)?,
        "sigma" => h.sigma = f(value)?,
        "delta" => h.delta = f(value)?,
        "tau_c" => h.tau_c = f(value)?,
        "gamma_l" => h.gamma_l = f(value)?,
        "gamma_u" => h.gamma_u = f(value)?,
        "alpha" => h.alpha = f(value)?,
        "k" => h.k = parse_value(key, value)?,
        "p" => h.p = f(value)?,
        "t_max" => h.t_max = parse_value(key, value)?,
        "t_wup" => h.t_wup = Some(parse_value(key, value)?),
        "t_wdown" => h.t_wdown = Some(parse_value(key, value)?),
        "beta_la" => h.beta_la = f(value)?,
        "q_cap" => h.q_cap = f(value)?,
        "e" => h.e = f(value)?,
        "ns_iters" => h.ns_iters = parse_value(key, value)?,
        "hessian_samples" => h.hessian_samples = parse_value(key, value)?,
        "hessian_estimator" => {
            h.hessian_estimator = match value.trim().to_ascii_lowercase().as_str() {
                "hutchinson" => HessianEstimator::Hutchinson,
                "exact" => HessianEstimator::Exact,
                other => return Err(Error::Config(format!("unknown hessian_estimator `{other}`"))),
            }
        }
        "paper_literal_decay_sign" => h.paper_literal_decay_sign = parse_bool(key, value)?,
        _ => return Err(Error::Config(format!("unknown hyperparameter `{key}`"))),
    }
    Ok(())
}

fn schedule_from(section: &BTreeMap<String, String>, steps: u64) -> Result<ScheduleSpec> {
    let get = |k: &str| section.get(k).map(String::as_str);
    let kind = get("kind").unwrap_or("constant");
    let allowed: &[&str] = match kind {
        "constant" => &["kind"],
        "cosine" => &["kind", "periods", "eta_min", "eta_max"],
        "ranger21" => &["kind", "t_max", "t_wup", "t_wdown", "beta2"],
        "relative" => &["kind", "q_cap"],
        other => return Err(Error::Config(format!("unknown schedule.kind `{other}`"))),
    };
    if let Some(k) = section.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!("schedule.{k} does not apply to `{kind}`")));
    }
    let num = |k: &str, default: f64| -> Result<f64> {
        get(k).map_or(Ok(default), |v| parse_value(&format!("schedule.{k}"), v))
    };
    let int = |k: &str, default: u64| -> Result<u64> {
        get(k).map_or(Ok(default), |v| parse_value(&format!("schedule.{k}"), v))
    };
    match kind {
        "constant" => Ok(ScheduleSpec::constant()),
        "cosine" => {
            let periods = match get("periods") {
                Some(v) => parse_list("schedule.periods", v)?,
                None => vec![steps],
            };
            ScheduleSpec::cosine_restarts(periods, num("eta_min", 0.0)?, num("eta_max", 1.0)?)
        }
        "ranger21" => {
            let t_max = int("t_max", steps)?;
            let beta2 = num("beta2", 0.999)?;
            match (get("t_wup"), get("t_wdown")) {
                (None, None) => ScheduleSpec::ranger21(t_max, beta2),
                _ => {
                    let wup = int("t_wup", ((0.22 * t_max as f64).ceil() as u64).max(1))?;
                    let wdown = int("t_wdown", ((0.28 * t_max as f64).ceil() as u64).max(1))?;
                    ScheduleSpec::ranger21_with(t_max, wup, wdown, beta2)
                }
            }
        }
        _ => {
            let s = ScheduleSpec {
                kind: crate::schedules::ScheduleKind::Relative {
                    q_cap: num("q_cap", 1e-2)?,
                },
            };
            s.validate()?;
            Ok(s)
        }
    }
}

fn spec_from(section: &BTreeMap<String, String>, what: &str, steps: u64) -> Result<OptimizerSpec> {
    let id: OptimizerId = section
        .get("id")
        .ok_or_else(|| Error::Config(format!("`{what}.id` is required")))?
        .parse()?;
    let mut spec = OptimizerSpec::with_defaults(id);
    if id == OptimizerId::Ranger21 && !section.contains_key("t_max") {
        spec.hyper.t_max = steps;
    }
    for (k, v) in section.iter().filter(|(k, _)| k.as_str() != "id") {
        set_hyperparameter(&mut spec.hyper, k, v).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{what}: {msg}")),
            other => other,
        })?;
    }
    Ok(spec)
}

/// Optimizer spec from the `optimizer.*`, `inner.*` and `schedule.*` keys.
pub fn optimizer_from(map: &ConfigMap, steps: u64) -> Result<OptimizerSpec> {
    let mut spec = spec_from(&map.section("optimizer"), "optimizer", steps)?;
    let schedule = schedule_from(&map.section("schedule"), steps)?;
    let inner_keys = map.section("inner");
    if spec.id.is_wrapper() {
        let mut inner = if inner_keys.is_empty() {
            OptimizerSpec::with_defaults(OptimizerId::Sgd)
        } else {
            let mut keys = inner_keys;
            keys.entry("id".into()).or_insert_with(|| "sgd".into());
            spec_from(&keys, "inner", steps)?
        };
        inner.schedule = schedule;
        spec.inner = Some(Box::new(inner));
    } else {
        if !inner_keys.is_empty() {
            return Err(Error::Config(format!("`{}` does not take inner.* keys", spec.id)));
        }
        spec.schedule = schedule;
    }
    spec.validate()?;
    Ok(spec)
}

/// Problem keys (`problem.*`), kept verbatim; two runs share a problem when
/// these maps are equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemConfig {
    pub name: String,
    pub params: BTreeMap<String, String>,
    /// Directory relative csv paths are resolved against.
    pub base_dir: Option<PathBuf>,
}

impl ProblemConfig {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            base_dir: None,
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }
}

/// Everything one `run` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub optimizer: OptimizerSpec,
    pub problem: ProblemConfig,
    pub steps: u64,
    pub seed: u64,
    pub log_every: u64,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    /// Steps-to-threshold target on the loss gap (or the loss when the
    /// minimum is unknown).
    pub threshold: f64,
    /// A loss above `divergence_factor · max(|L₀|, 1)` counts as divergence.
    pub divergence_factor: f64,
}

const RUN_KEYS: &[&str] = &[
    "name",
    "steps",
    "seed",
    "log_every",
    "trace",
    "summary",
    "out_dir",
    "threshold",
    "divergence_factor",
];

/// Default output directory: `$OPTBENCH_OUT_DIR`, else `optbench-out`.
pub fn default_out_dir() -> PathBuf {
    env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

impl RunConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        for key in map.keys() {
            let section = key.split('.').next().unwrap_or("");
            if !["optimizer", "inner", "schedule", "problem", "run"].contains(&section) || !key.contains('.') {
                return Err(Error::Config(format!("unknown key `{key}`")));
            }
        }
        let run = map.section("run");
        if let Some(k) = run.keys().find(|k| !RUN_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key `run.{k}`")));
        }
        let get = |k: &str| run.get(k).map(String::as_str);
        let steps: u64 = get("steps").map_or(Ok(1000), |v| parse_value("run.steps", v))?;
        if steps == 0 {
            return Err(Error::Config("run.steps must be >= 1".into()));
        }
        let log_every: u64 = get("log_every").map_or(Ok(1), |v| parse_value("run.log_every", v))?;
        if log_every == 0 {
            return Err(Error::Config("run.log_every must be >= 1".into()));
        }
        let seed: u64 = get("seed").map_or(Ok(0), |v| parse_value("run.seed", v))?;
        let threshold: f64 = get("threshold").map_or(Ok(1e-6), |v| parse_value("run.threshold", v))?;
        let divergence_factor: f64 =
            get("divergence_factor").map_or(Ok(1e10), |v| parse_value("run.divergence_factor", v))?;
        if !(divergence_factor > 1.0) {
            return Err(Error::Config("run.divergence_factor must be > 1".into()));
        }

        let mut optimizer = optimizer_from(map, steps)?;
        optimizer.seed = seed;

        let mut problem_keys = map.section("problem");
        let name = problem_keys
            .remove("name")
            .ok_or_else(|| Error::Config("`problem.name` is required".into()))?;
        let problem = ProblemConfig {
            name,
            params: problem_keys,
            base_dir: map.source().and_then(Path::parent).map(Path::to_path_buf),
        };
        // Fail early on bad problem settings or a missing csv.
        super::problem::build_problem(&problem)?;

        let run_name = get("name").map(str::to_string).unwrap_or_else(|| {
            map.source()
                .and_then(|p| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| optimizer.id.to_string())
        });
        let out_dir = get("out_dir").map(PathBuf::from).unwrap_or_else(default_out_dir);
        let trace_path = get("trace")
            .map(PathBuf::from)
            .unwrap_or_else(|| out_dir.join(format!("{run_name}.trace.csv")));
        let summary_path = get("summary")
            .map(PathBuf::from)
            .unwrap_or_else(|| out_dir.join(format!("{run_name}.summary.json")));
        Ok(Self {
            name: run_name,
            optimizer,
            problem,
            steps,
            seed,
            log_every,
            trace_path,
            summary_path,
            threshold,
            divergence_factor,
        })
    }

    /// Read `path`, apply `overrides` (`KEY=VALUE`), and validate.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let mut map = ConfigMap::from_path(path)?;
        for o in overrides {
            map.set_override(o)?;
        }
        Self::from_map(&map)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(&ConfigMap::parse(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "
        # a comment
        optimizer.id = adam
        optimizer.lr = 0.01   # trailing comment
        problem.name = quadratic
        run.steps = 20
        run.out_dir = /tmp/x
    ";

    #[test]
    fn parses_basic_config() {
        let cfg = RunConfig::parse(BASIC).unwrap();
        assert_eq!(cfg.optimizer.id, OptimizerId::Adam);
        assert_eq!(cfg.optimizer.hyper.lr, 0.01);
        assert_eq!(cfg.optimizer.hyper.beta2, 0.999);
        assert_eq!(cfg.steps, 20);
        assert_eq!(cfg.trace_path, PathBuf::from("/tmp/x/adam.trace.csv"));
    }

    #[test]
    fn sections_prefix_keys() {
        let map = ConfigMap::parse("[optimizer]\nid = sgd\nlr = 0.5\n[problem]\nname = quadratic\n").unwrap();
        assert_eq!(map.get("optimizer.lr"), Some("0.5"));
        assert_eq!(RunConfig::from_map(&map).unwrap().optimizer.hyper.lr, 0.5);
    }

    #[test]
    fn overrides_win() {
        let mut map = ConfigMap::parse(BASIC).unwrap();
        map.set_override("optimizer.lr=0.2").unwrap();
        map.set_override("run.seed = 7").unwrap();
        let cfg = RunConfig::from_map(&map).unwrap();
        assert_eq!((cfg.optimizer.hyper.lr, cfg.seed, cfg.optimizer.seed), (0.2, 7, 7));
        assert!(map.set_override("no-equals").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "optimizer.id = lars\nproblem.name = quadratic",
            "optimizer.id = adam\nproblem.name = quadratic\noptimizer.bogus = 1",
            "optimizer.id = adam\nproblem.name = quadratic\nrun.steps = 0",
            "optimizer.id = adam\nproblem.name = quadratic\nrun.log_every = 0",
            "optimizer.id = adam\nproblem.name = nope",
            "optimizer.id = adam\nproblem.name = quadratic\nfoo = 1",
            "optimizer.id = adam\nproblem.name = quadratic\nschedule.kind = cosine\nschedule.q_cap = 1",
            "optimizer.id = adam\nproblem.name = quadratic\noptimizer.lr = -1",
            "optimizer.id = adam\nproblem.name = quadratic\ninner.id = sgd",
            "optimizer.id = sam\nproblem.name = quadratic\ninner.id = lookahead",
            "optimizer.id = adam\noptimizer.id = sgd\nproblem.name = quadratic",
            "just words",
        ] {
            assert!(matches!(RunConfig::parse(bad), Err(Error::Config(_) | Error::Hyperparameter { .. } | Error::UnknownOptimizer(_))), "{bad}");
        }
    }

    #[test]
    fn wrapper_schedule_drives_inner() {
        let cfg = RunConfig::parse(
            "optimizer.id = lookahead\noptimizer.k = 3\ninner.id = adam\ninner.lr = 0.1\nschedule.kind = cosine\nproblem.name = quadratic\nrun.steps = 40",
        )
        .unwrap();
        let inner = cfg.optimizer.inner_spec().unwrap();
        assert_eq!((cfg.optimizer.hyper.k, inner.id, inner.hyper.lr), (3, OptimizerId::Adam, 0.1));
        assert_eq!(inner.schedule.eta_at(41), 1.0);
        assert!(inner.schedule.eta_at(40) < 0.01);
    }

    #[test]
    fn ranger21_t_max_defaults_to_steps() {
        let cfg = RunConfig::parse("optimizer.id = ranger21\nproblem.name = quadratic\nrun.steps = 300").unwrap();
        assert_eq!(cfg.optimizer.hyper.t_max, 300);
    }

    #[test]
    fn hyperparameter_names_round_trip() {
        let mut h = Hyperparameters::default();
        set_hyperparameter(&mut h, "hessian_estimator", "exact").unwrap();
        set_hyperparameter(&mut h, "paper_literal_decay_sign", "true").unwrap();
        set_hyperparameter(&mut h, "t_wup", "7").unwrap();
        assert_eq!(h.hessian_estimator, HessianEstimator::Exact);
        assert!(h.paper_literal_decay_sign);
        assert_eq!(h.t_wup, Some(7));
        assert!(set_hyperparameter(&mut h, "k", "1.5").is_err());
    }
}
