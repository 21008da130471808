use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use optbench::harness::{compare, verify::well_conditioned, RunConfig};
use optbench::kernels::{hutchinson_from_probes, newton_schulz, rademacher};
use optbench::problems::{DatasetTable, LogisticProblem, Problem};
use optbench::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn compare_runs(c: &mut Criterion) {
    let configs: Vec<RunConfig> = ["sgd", "momentum", "adam", "adamw", "nadam", "lion", "adan", "sophia"]
        .iter()
        .map(|id| {
            RunConfig::parse(&format!(
                "optimizer.id = {id}\noptimizer.lr = 0.001\nproblem.name = rosenbrock\nproblem.dim = 8\nrun.steps = 2000"
            ))
            .unwrap()
        })
        .collect();
    let mut g = c.benchmark_group("compare_8_runs");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| compare(&configs, exec).unwrap()));
    }
    g.finish();
}

fn hutchinson(c: &mut Criterion) {
    let p = LogisticProblem::new(DatasetTable::bundled(), 0.01).unwrap();
    let w = vec![0.1; p.layout().len()];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let probes: Vec<Vec<f64>> = (0..256).map(|_| rademacher(w.len(), &mut rng)).collect();
    let mut g = c.benchmark_group("hutchinson_256_probes");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| hutchinson_from_probes(&probes, exec, |u| Ok(p.hvp(&w, u, None).unwrap())).unwrap())
        });
    }
    g.finish();
}

fn newton_schulz_sweep(c: &mut Criterion) {
    let mats: Vec<DMatrix<f64>> = (0..64).map(|s| DMatrix::from_row_slice(32, 32, &well_conditioned(32, 32, s))).collect();
    let mut g = c.benchmark_group("newton_schulz_64_seeds");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| exec.map(&mats, |m| newton_schulz(m, 5).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, compare_runs, hutchinson, newton_schulz_sweep);
criterion_main!(benches);
