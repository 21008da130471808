//! Config ingestion, runs, traces, gradient checks and property suites.

pub mod cli;
pub mod compare;
pub mod config;
pub mod gradcheck;
pub mod problem;
pub mod run;
pub mod trace;
pub mod verify;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use compare::{compare, CompareReport, CompareRow};
pub use config::{ConfigMap, ProblemConfig, RunConfig, OUT_DIR_ENV};
pub use gradcheck::{gradcheck, GradcheckReport};
pub use problem::build_problem;
pub use run::{execute, run_in_memory, simulate, Divergence, RunOutcome, RunSummary};
pub use trace::TraceRecord;
pub use verify::{verify, PropertyResult, Suite};

use crate::error::{Error, Result};
use crate::optimizers::registry;

/// Exit code contract of the CLI.
pub mod exit {
    pub const OK: i32 = 0;
    pub const DIVERGED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const PROPERTY: i32 = 3;
}

/// Write `bytes` to a sibling temp file, then rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// `name  year  id` rows for every optimizer, oldest first.
pub fn list_optimizers() -> String {
    let rows = registry();
    let w = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = format!("{:<w$}  year  id\n", "name");
    for r in rows {
        out.push_str(&format!("{:<w$}  {}  {}\n", r.name, r.year, r.id));
    }
    out
}
