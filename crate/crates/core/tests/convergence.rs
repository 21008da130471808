use std::path::Path;

use optbench::harness::{run_in_memory, RunConfig};
use optbench::OptimizerId;

#[test]
fn every_checked_in_config_converges() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/convergence");
    for id in OptimizerId::ALL {
        let cfg = RunConfig::load(dir.join(format!("{id}.cfg")), &[]).unwrap();
        assert_eq!(cfg.optimizer.id, id);
        let out = run_in_memory(&cfg).unwrap();
        let d = out.summary.final_distance.unwrap();
        assert!(d < 1e-4, "{id}: distance {d:e}");
        assert!(out.summary.steps_to_threshold.is_some(), "{id}");
    }
}
