//! Numerical building blocks shared by the update rules.

mod factored;
mod hutchinson;
mod newton_schulz;

pub use factored::{adafactor_beta2, factored_update, FactoredSecondMoment};
pub use hutchinson::{hutchinson_diag, hutchinson_from_probes, rademacher};
pub use newton_schulz::{newton_schulz, newton_schulz_rows, DEFAULT_NS_ITERS};
pub(crate) use newton_schulz::row_major;

/// Elementwise clamp to `[−τ, τ]`.
pub fn clip_symmetric(z: &[f64], tau: f64) -> Vec<f64> {
    z.iter().map(|v| v.min(tau).max(-tau)).collect()
}

/// Adaptive gradient clipping over the rows of a row-major `rows × cols`
/// tensor: a row whose `‖g‖ / max(‖w‖, ε_c)` exceeds `τ_c` is rescaled to
/// norm `τ_c·max(‖w‖, ε_c)`.
pub fn adaptive_grad_clip(g: &mut [f64], w: &[f64], cols: usize, tau_c: f64, eps_c: f64) {
    debug_assert_eq!(g.len(), w.len());
    let cols = cols.max(1);
    for (gr, wr) in g.chunks_mut(cols).zip(w.chunks(cols)) {
        let gn = norm(gr);
        let wn = norm(wr).max(eps_c);
        if gn / wn > tau_c {
            let scale = tau_c * wn / gn;
            gr.iter_mut().for_each(|x| *x *= scale);
        }
    }
}

/// Subtract the mean of the tensor from every entry.
pub fn gradient_centralize(g: &mut [f64]) {
    if g.is_empty() {
        return;
    }
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    g.iter_mut().for_each(|x| *x -= mean);
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clip_examples() {
        assert_eq!(clip_symmetric(&[-5.0, 0.3, 2.0], 1.0), vec![-1.0, 0.3, 1.0]);
        let z = [0.1, -0.5, 0.9];
        assert_eq!(clip_symmetric(&z, 1.0), z.to_vec());
    }

    #[test]
    fn agc_rescales_large_rows() {
        let mut g = vec![6.0, 8.0];
        let w = vec![1.0, 0.0];
        adaptive_grad_clip(&mut g, &w, 2, 0.01, 1e-3);
        assert!((norm(&g) - 0.01).abs() < 1e-15);
        assert!((g[0] / g[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn agc_leaves_small_rows() {
        let mut g = vec![0.001, 0.0, 5.0, 5.0];
        let w = vec![1.0, 1.0, 1.0, 1.0];
        adaptive_grad_clip(&mut g, &w, 2, 0.01, 1e-3);
        assert_eq!(&g[..2], &[0.001, 0.0]);
        assert!((norm(&g[2..]) - 0.01 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn agc_zero_weights_use_eps() {
        let mut g = vec![3.0, 4.0];
        adaptive_grad_clip(&mut g, &[0.0, 0.0], 2, 0.5, 1e-3);
        assert!(norm(&g) <= 0.5 * 1e-3 * (1.0 + 1e-12));
    }

    #[test]
    fn centralize_example() {
        let mut g = vec![1.0, 2.0, 3.0];
        gradient_centralize(&mut g);
        assert_eq!(g, vec![-1.0, 0.0, 1.0]);
        let mut z = vec![-1.0, 0.0, 1.0];
        gradient_centralize(&mut z);
        assert_eq!(z, vec![-1.0, 0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn centralized_mean_is_zero(g in proptest::collection::vec(-10.0f64..10.0, 100)) {
            let mut g = g;
            gradient_centralize(&mut g);
            let mean = g.iter().sum::<f64>() / 100.0;
            prop_assert!(mean.abs() < 1e-12);
        }

        #[test]
        fn clip_is_idempotent(z in proptest::collection::vec(-10.0f64..10.0, 1..20), tau in 0.01f64..5.0) {
            let once = clip_symmetric(&z, tau);
            prop_assert_eq!(clip_symmetric(&once, tau), once);
        }

        #[test]
        fn agc_never_grows_rows(
            g in proptest::collection::vec(-100.0f64..100.0, 12),
            w in proptest::collection::vec(-2.0f64..2.0, 12),
            tau in 0.001f64..1.0,
        ) {
            let mut clipped = g.clone();
            adaptive_grad_clip(&mut clipped, &w, 4, tau, 1e-3);
            for (a, b) in clipped.chunks(4).zip(g.chunks(4)) {
                prop_assert!(norm(a) <= norm(b) * (1.0 + 1e-12));
            }
        }
    }
}
