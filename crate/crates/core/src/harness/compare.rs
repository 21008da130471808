//! Side-by-side runs of several configs on one problem.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::problem::build_problem;
use super::run::{simulate, summary_json};
use super::trace::{self, TraceRecord};
use super::write_atomic;
use crate::error::{Error, Result};
use crate::par::Execution;

/// One report row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub name: String,
    /// Optimizer id, or `trace` for rows read back from a trace file.
    pub optimizer: String,
    pub steps: u64,
    pub final_loss: f64,
    pub best_loss: f64,
    pub steps_to_threshold: Option<u64>,
    pub diverged_at: Option<u64>,
    /// `None` for rows read from traces.
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub problem: String,
    pub threshold: f64,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn to_json(&self) -> String {
        summary_json(self)
    }

    /// Aligned plain-text table.
    pub fn render_table(&self) -> String {
        let header = [
            "name".to_string(),
            "optimizer".into(),
            "steps".into(),
            "final_loss".into(),
            "best_loss".into(),
            format!("steps_to_{:.0e}", self.threshold),
            "wall_s".into(),
        ];
        let mut cells = vec![header.to_vec()];
        for r in &self.rows {
            let mut steps_to = r.steps_to_threshold.map_or_else(|| "-".to_string(), |s| s.to_string());
            if let Some(d) = r.diverged_at {
                steps_to = format!("diverged@{d}");
            }
            cells.push(vec![
                r.name.clone(),
                r.optimizer.clone(),
                r.steps.to_string(),
                format!("{:.6e}", r.final_loss),
                format!("{:.6e}", r.best_loss),
                steps_to,
                r.wall_time_s.map_or_else(|| "-".to_string(), |w| format!("{w:.3}")),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|j| cells.iter().map(|row| row[j].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, w))| if j < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Run every config on their shared problem, one run per worker.
pub fn compare(configs: &[RunConfig], exec: Execution) -> Result<CompareReport> {
    let first = configs
        .first()
        .ok_or_else(|| Error::Config("compare needs at least one config".into()))?;
    for c in &configs[1..] {
        if c.problem.name != first.problem.name || c.problem.params != first.problem.params {
            return Err(Error::Config(format!(
                "config `{}` uses a different problem than `{}`",
                c.name, first.name
            )));
        }
    }
    let problem = build_problem(&first.problem)?;
    let outcomes = exec.map(configs, |c| simulate(c, problem.as_ref()));
    let mut rows = Vec::with_capacity(configs.len());
    for out in outcomes {
        let s = out?.summary;
        rows.push(CompareRow {
            name: s.name,
            optimizer: s.optimizer,
            steps: s.steps_completed,
            final_loss: s.final_loss,
            best_loss: s.best_loss,
            steps_to_threshold: s.steps_to_threshold,
            diverged_at: s.diverged.map(|d| d.step),
            wall_time_s: Some(s.wall_time_s),
        });
    }
    Ok(CompareReport {
        problem: problem.name().to_string(),
        threshold: first.threshold,
        rows,
    })
}

/// A row summarizing a trace file. Steps-to-threshold uses the raw logged
/// loss since a trace does not record the optimum.
pub fn row_from_trace(path: &Path, threshold: f64) -> Result<CompareRow> {
    let records = trace::read(path)?;
    row_from_records(&name_of(path), &records, threshold)
}

fn name_of(path: &Path) -> String {
    let stem = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.strip_suffix(".trace.csv")
        .or_else(|| stem.strip_suffix(".csv"))
        .unwrap_or(&stem)
        .to_string()
}

pub fn row_from_records(name: &str, records: &[TraceRecord], threshold: f64) -> Result<CompareRow> {
    let last = records
        .last()
        .ok_or_else(|| Error::Config(format!("trace `{name}` has no rows")))?;
    Ok(CompareRow {
        name: name.to_string(),
        optimizer: "trace".into(),
        steps: last.t,
        final_loss: last.loss,
        best_loss: records.iter().map(|r| r.loss).fold(f64::INFINITY, f64::min),
        steps_to_threshold: records.iter().find(|r| r.loss <= threshold).map(|r| r.t),
        diverged_at: None,
        wall_time_s: None,
    })
}

/// `compare` plus any traces, writing the JSON report to `out`.
pub fn compare_to_file(
    configs: &[RunConfig],
    traces: &[PathBuf],
    out: &Path,
    exec: Execution,
) -> Result<CompareReport> {
    let mut report = if configs.is_empty() {
        if traces.is_empty() {
            return Err(Error::Config("compare needs at least one config or trace".into()));
        }
        CompareReport {
            problem: "traces".into(),
            threshold: 1e-6,
            rows: Vec::new(),
        }
    } else {
        compare(configs, exec)?
    };
    for t in traces {
        report.rows.push(row_from_trace(t, report.threshold)?);
    }
    write_atomic(out, report.to_json().as_bytes())?;
    Ok(report)
}
