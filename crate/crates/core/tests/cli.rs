use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use optbench::harness::trace;

fn optbench(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optbench"))
        .args(args)
        .env("OPTBENCH_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn run_writes_trace_and_summary_to_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sgd.cfg",
        "optimizer.id = sgd\noptimizer.lr = 0.5\nproblem.name = quadratic\nrun.steps = 100\n",
    );
    let out = optbench(&["run", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = trace::read(&dir.path().join("sgd.trace.csv")).unwrap();
    assert_eq!(records.len(), 100);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sgd.summary.json")).unwrap()).unwrap();
    assert!(summary["final_loss"].as_f64().unwrap() < 1e-10);
    assert!(String::from_utf8_lossy(&out.stdout).contains("final loss"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.cfg",
        "optimizer.id = sophia\nproblem.name = noisy_quadratic\nproblem.noise = 0.3\nrun.steps = 200\nrun.seed = 5\n",
    );
    let mut traces = Vec::new();
    for i in 0..2 {
        let set = format!("run.trace={}", dir.path().join(format!("t{i}.csv")).display());
        let out = optbench(&["run", "--config", &cfg, "--set", &set], dir.path());
        assert!(out.status.success());
        traces.push(fs::read(dir.path().join(format!("t{i}.csv"))).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn divergence_exits_one_with_truncated_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "div.cfg",
        "optimizer.id = sgd\noptimizer.lr = 2.5\nproblem.name = quadratic\nrun.steps = 1000\n",
    );
    let out = optbench(&["run", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step 29"));
    let records = trace::read(&dir.path().join("div.trace.csv")).unwrap();
    assert_eq!(records.last().unwrap().t, 28);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "optimizer.id = adam\nproblem.name = quadratic\nrun.steps = 0\n");
    assert_eq!(optbench(&["run", "--config", &cfg], dir.path()).status.code(), Some(2));
    let missing = dir.path().join("nope.cfg").display().to_string();
    assert_eq!(optbench(&["run", "--config", &missing], dir.path()).status.code(), Some(2));
    let good = write(dir.path(), "g.cfg", "optimizer.id = adam\nproblem.name = quadratic\n");
    let out = optbench(&["run", "--config", &good, "--set", "optimizer.lr=abc"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(optbench(&["verify", "--suite", "bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(optbench(&["compare"], dir.path()).status.code(), Some(2));
}

#[test]
fn compare_reports_and_rereads_traces() {
    let dir = tempfile::tempdir().unwrap();
    let mk = |name: &str, id: &str| {
        write(
            dir.path(),
            &format!("{name}.cfg"),
            &format!("optimizer.id = {id}\noptimizer.lr = 0.001\nproblem.name = rosenbrock\nrun.steps = 2000\n"),
        )
    };
    let (a, b) = (mk("sgd", "sgd"), mk("momentum", "momentum"));
    assert!(optbench(&["run", "--config", &a], dir.path()).status.success());
    let report = dir.path().join("report.json").display().to_string();
    let trace = dir.path().join("sgd.trace.csv").display().to_string();
    let out = optbench(
        &["compare", "--config", &a, &b, "--trace", &trace, "--out", &report],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["optimizer"], "trace");
    assert_eq!(rows[2]["steps"], 2000);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.lines().next().unwrap().starts_with("name"));

    let other = write(dir.path(), "q.cfg", "optimizer.id = sgd\nproblem.name = quadratic\n");
    assert_eq!(optbench(&["compare", "--config", &a, &other], dir.path()).status.code(), Some(2));
}

#[test]
fn gradcheck_and_verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    for problem in ["quadratic", "spd_quadratic", "rosenbrock", "logistic"] {
        let out = optbench(&["gradcheck", "--problem", problem], dir.path());
        assert!(out.status.success(), "{problem}: {}", String::from_utf8_lossy(&out.stdout));
    }
    let csv = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic_logistic.csv");
    assert!(optbench(&["gradcheck", "--problem", "logistic", "--csv", csv], dir.path()).status.success());
    let out = optbench(&["verify", "--suite", "kernels"], dir.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().filter(|l| l.starts_with("PASS")).count(), 3);
    // The Adamax p = 64 property is out of reach, so limits fails.
    let out = optbench(&["verify", "--suite", "limits"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL limits/adamax_p64_limit"));
}

#[test]
fn list_optimizers_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = optbench(&["list-optimizers"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 25);
    assert!(text.lines().last().unwrap().contains("2024"));
}
