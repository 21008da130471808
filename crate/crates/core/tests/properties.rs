use std::sync::Arc;

use proptest::prelude::*;

use optbench::harness::trace::{self, TraceRecord};
use optbench::harness::ConfigMap;
use optbench::kernels::{adaptive_grad_clip, clip_symmetric, gradient_centralize};
use optbench::optimizers::{sharpness_perturbation, FnSource, OptimizerId, OptimizerSpec};
use optbench::param::{ParameterLayout, ParameterSet};
use optbench::schedules::{cosine_multiplier, ranger21_multiplier};

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn clip_is_idempotent(z in prop::collection::vec(-1e3f64..1e3, 1..20), tau in 1e-3f64..10.0) {
        let once = clip_symmetric(&z, tau);
        prop_assert_eq!(clip_symmetric(&once, tau), once.clone());
        prop_assert!(once.iter().all(|v| v.abs() <= tau));
    }

    #[test]
    fn agc_never_grows_rows(
        rows in 1usize..5,
        cols in 1usize..5,
        seed in prop::collection::vec(-10f64..10.0, 50),
        tau in 1e-3f64..1.0,
    ) {
        let n = rows * cols;
        let mut g = seed[..n].to_vec();
        let w = seed[25..25 + n].to_vec();
        let before = g.clone();
        adaptive_grad_clip(&mut g, &w, cols, tau, 1e-3);
        for r in 0..rows {
            let s = r * cols..(r + 1) * cols;
            prop_assert!(norm(&g[s.clone()]) <= norm(&before[s]) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn centralized_gradient_has_zero_mean(g in prop::collection::vec(-1e3f64..1e3, 1..30)) {
        let mut c = g.clone();
        gradient_centralize(&mut c);
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        prop_assert!(mean.abs() <= 1e-12 * g.iter().fold(1.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn sam_perturbation_has_radius_sigma(
        g in prop::collection::vec(-10f64..10.0, 2..10),
        sigma in 1e-3f64..1.0,
    ) {
        prop_assume!(norm(&g) > 1e-6);
        let w = vec![1.0; g.len()];
        let e = sharpness_perturbation(&w, &g, sigma, false);
        prop_assert!((norm(&e) - sigma).abs() <= 1e-12 * sigma.max(1.0));
    }

    #[test]
    fn schedules_stay_in_unit_interval(t in 1u64..5000, t_i in 1u64..500) {
        let c = cosine_multiplier((t % t_i) as f64, t_i as f64, 0.0, 1.0);
        prop_assert!((0.0..=1.0).contains(&c));
        let r = ranger21_multiplier(t, 5000, 1100, 1400, 0.999);
        prop_assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn trace_round_trip(losses in prop::collection::vec(-1e300f64..1e300, 1..40)) {
        let recs: Vec<TraceRecord> = losses
            .iter()
            .enumerate()
            .map(|(i, l)| TraceRecord {
                t: i as u64 + 1,
                loss: *l,
                grad_norm: l.abs().sqrt(),
                update_norm: 1.0 / (i as f64 + 3.0),
                effective_lr: 1e-3,
                extra_evals: i,
            })
            .collect();
        prop_assert_eq!(trace::parse(&trace::render(&recs)).unwrap(), recs);
    }

    #[test]
    fn config_lines_round_trip(lr in 1e-6f64..10.0, steps in 1u64..10_000) {
        let text = format!("optimizer.id = adam\noptimizer.lr = {lr}\nrun.steps = {steps}\n");
        let map = ConfigMap::parse(&text).unwrap();
        prop_assert_eq!(map.get("optimizer.lr").unwrap().parse::<f64>().unwrap(), lr);
        prop_assert_eq!(map.get("run.steps").unwrap().parse::<u64>().unwrap(), steps);
    }

    #[test]
    fn steps_are_pure(g in prop::collection::vec(-5f64..5.0, 4), which in 0usize..24) {
        let id = OptimizerId::ALL[which];
        let opt = OptimizerSpec::with_defaults(id).optimizer().unwrap();
        let layout = Arc::new(ParameterLayout::flat(4).unwrap());
        let params = ParameterSet::unflatten(layout.clone(), vec![0.5, -0.25, 1.0, 2.0]).unwrap();
        let state = opt.init_state(&layout).unwrap();
        let g2 = g.clone();
        let src = FnSource::new(move |w: &[f64]| (0.0, g2.iter().zip(w).map(|(a, b)| a + 0.1 * b).collect()));
        let a = opt.step(&state, &params, &src).unwrap();
        let b = opt.step(&state, &params, &src).unwrap();
        prop_assert_eq!(a.new_params.values(), b.new_params.values());
        prop_assert_eq!(a.new_state, b.new_state);
        prop_assert_eq!(params.values(), &[0.5, -0.25, 1.0, 2.0][..]);
    }
}
