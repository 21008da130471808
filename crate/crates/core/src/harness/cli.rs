//! The `optbench` command line.

use std::path::PathBuf;
use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::harness::{
    self, compare::compare_to_file, config::default_out_dir, exit, gradcheck::DEFAULT_POINTS, ProblemConfig,
    RunConfig, Suite,
};
use crate::{Error, Execution};

#[derive(Parser)]
#[command(name = "optbench", version, about = "Deterministic optimizer benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config, writing a CSV trace and a JSON summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `--set optimizer.lr=0.1`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run several configs on one problem and tabulate them.
    Compare {
        #[arg(long, num_args = 1..)]
        config: Vec<PathBuf>,
        /// Existing trace files to include as extra rows.
        #[arg(long, num_args = 1..)]
        trace: Vec<PathBuf>,
        /// Applied to every config.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Report path; defaults to `compare.json` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the configs one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Check analytic gradients and Hessian-vector products against finite
    /// differences.
    Gradcheck {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Problem parameters, e.g. `--set dim=6`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run a property suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Print results as JSON instead of lines.
        #[arg(long)]
        json: bool,
    },
    /// Print every optimizer with its year and id.
    ListOptimizers,
}

fn config_error(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit::CONFIG as u8)
}

/// Parse `args` (program name first) and run the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::parse_from(args);
    match cli.command {
        Command::Run { config, set } => {
            let cfg = match RunConfig::load(&config, &set) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            let outcome = match harness::execute(&cfg) {
                Ok(o) => o,
                Err(e) => return config_error(e),
            };
            println!("{}", outcome.summary.render_text());
            println!("  trace             {}", cfg.trace_path.display());
            println!("  summary           {}", cfg.summary_path.display());
            match &outcome.summary.diverged {
                Some(d) => {
                    eprintln!("diverged at step {}: {}", d.step, d.reason);
                    ExitCode::from(exit::DIVERGED as u8)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Command::Compare {
            config,
            trace,
            set,
            out,
            sequential,
        } => {
            let configs: Result<Vec<_>, _> = config.iter().map(|p| RunConfig::load(p, &set)).collect();
            let configs = match configs {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            let out = out.unwrap_or_else(|| default_out_dir().join("compare.json"));
            let exec = if sequential { Execution::Sequential } else { Execution::default() };
            match compare_to_file(&configs, &trace, &out, exec) {
                Ok(report) => {
                    print!("{}", report.render_table());
                    println!("report: {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => config_error(e),
            }
        }
        Command::Gradcheck {
            problem,
            csv,
            points,
            seed,
            set,
        } => {
            let mut cfg = ProblemConfig::new(problem);
            if let Some(csv) = csv {
                cfg = cfg.with("csv", csv.display());
            }
            for s in &set {
                match s.split_once('=') {
                    Some((k, v)) => cfg = cfg.with(k.trim().trim_start_matches("problem."), v.trim()),
                    None => return config_error(Error::Config(format!("`{s}` is not KEY=VALUE"))),
                }
            }
            let report = harness::build_problem(&cfg).and_then(|p| harness::gradcheck(p.as_ref(), points, seed));
            match report {
                Ok(r) => {
                    println!("{}", r.render_text());
                    if r.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(exit::PROPERTY as u8)
                    }
                }
                Err(e) => config_error(e),
            }
        }
        Command::Verify { suite, json } => {
            let suite: Suite = match suite.parse() {
                Ok(s) => s,
                Err(e) => return config_error(e),
            };
            let results = harness::verify(suite);
            if json {
                println!("{}", serde_json::to_string_pretty(&results).expect("results serialize"));
            } else {
                for r in &results {
                    println!("{}", r.line());
                }
                let failed = results.iter().filter(|r| !r.passed).count();
                println!("{} of {} properties passed", results.len() - failed, results.len());
            }
            if harness::verify::all_passed(&results) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(exit::PROPERTY as u8)
            }
        }
        Command::ListOptimizers => {
            print!("{}", harness::list_optimizers());
            ExitCode::SUCCESS
        }
    }
}
