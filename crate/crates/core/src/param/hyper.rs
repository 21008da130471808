use crate::error::{Error, Result};
use crate::optimizers::OptimizerId;

/// How Sophia obtains its diagonal Hessian estimate on refresh steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianEstimator {
    /// Rademacher-probe Hutchinson estimate through the problem's
    /// Hessian-vector product (finite differences when none is exposed).
    Hutchinson,
    /// `diag(H)` read from the problem; test oracle only.
    Exact,
}

/// Every hyperparameter any update rule in the catalog uses. Names follow the
/// config keys (`optimizer.<field>`).
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    /// Base learning rate η.
    pub lr: f64,
    /// Momentum γ (Momentum, NAG, Muon).
    pub momentum: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps_c: f64,
    pub weight_decay: f64,
    /// SAM / ASAM neighbourhood radius σ.
    pub sigma: f64,
    /// Sophia clipping rate δ.
    pub delta: f64,
    pub tau_c: f64,
    pub gamma_l: f64,
    pub gamma_u: f64,
    /// Lookahead slow-weight step α.
    pub alpha: f64,
    /// Sync interval (Lookahead, Ranger21) or Hessian refresh interval (Sophia).
    pub k: u64,
    /// Adamax norm exponent; only the limit check reads it.
    pub p: f64,
    pub t_max: u64,
    pub t_wup: Option<u64>,
    pub t_wdown: Option<u64>,
    pub beta_la: f64,
    pub q_cap: f64,
    /// Adafactor decay exponent `e` in `1 - t^-e`.
    pub e: f64,
    pub ns_iters: usize,
    pub hessian_samples: usize,
    pub hessian_estimator: HessianEstimator,
    /// Apply `-λw` inside the parentheses exactly as printed in the AdamW and
    /// Lion rules (grows weights). Off by default.
    pub paper_literal_decay_sign: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            momentum: 0.9,
            beta0: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            beta3: 0.01,
            eps: 1e-8,
            eps1: 1e-30,
            eps2: 1e-3,
            eps_c: 1e-3,
            weight_decay: 0.0,
            sigma: 0.05,
            delta: 0.01,
            tau_c: 1.0,
            gamma_l: 1e-3,
            gamma_u: 10.0,
            alpha: 0.5,
            k: 5,
            p: 64.0,
            t_max: 1000,
            t_wup: None,
            t_wdown: None,
            beta_la: 0.5,
            q_cap: 1e-2,
            e: 0.8,
            ns_iters: 5,
            hessian_samples: 1,
            hessian_estimator: HessianEstimator::Hutchinson,
            paper_literal_decay_sign: false,
        }
    }
}

impl Hyperparameters {
    /// Published defaults for `id`; anything the rule does not use keeps the
    /// generic default.
    pub fn defaults_for(id: OptimizerId) -> Self {
        let base = Self::default();
        use OptimizerId::*;
        match id {
            Sgd => Self { lr: 0.01, ..base },
            Momentum | Nag => Self { lr: 0.01, momentum: 0.9, ..base },
            Adagrad => Self { lr: 0.01, eps: 1e-8, ..base },
            Rmsprop => Self { lr: 1e-3, beta2: 0.9, eps: 1e-8, ..base },
            Adadelta => Self { lr: 1.0, beta2: 0.95, eps: 1e-6, ..base },
            Adam | Adamnc | Adamax | Amsgrad | Radam | Adabelief => base,
            Nadam => Self { beta1: 0.975, beta2: 0.999, eps: 1e-8, ..base },
            Adamw => Self { weight_decay: 0.01, ..base },
            Adafactor => Self {
                eps1: 1e-30,
                eps2: 1e-3,
                tau_c: 1.0,
                q_cap: 1e-2,
                e: 0.8,
                ..base
            },
            Lamb => Self { eps: 1e-6, weight_decay: 0.01, ..base },
            Lookahead => Self { alpha: 0.5, k: 5, ..base },
            Sam | Asam => Self { lr: 0.01, sigma: 0.05, ..base },
            Ranger21 => Self {
                k: 5,
                weight_decay: 1e-4,
                tau_c: 1e-2,
                eps: 1e-8,
                eps_c: 1e-3,
                beta0: 0.9,
                beta1: 0.9,
                beta2: 0.999,
                beta_la: 0.5,
                ..base
            },
            Adan => Self {
                beta1: 0.02,
                beta2: 0.08,
                beta3: 0.01,
                weight_decay: 0.02,
                ..base
            },
            Lion => Self { lr: 1e-4, beta1: 0.9, beta2: 0.99, ..base },
            Sophia => Self {
                beta1: 0.96,
                beta2: 0.99,
                eps: 1e-12,
                weight_decay: 0.02,
                delta: 0.01,
                k: 10,
                ..base
            },
            Muon => Self {
                lr: 0.02,
                momentum: 0.95,
                weight_decay: 0.01,
                ns_iters: 5,
                ..base
            },
        }
    }

    /// Ranger21 warm-up length; defaults to ⌈0.22·t_max⌉.
    pub fn warmup_steps(&self) -> u64 {
        self.t_wup
            .unwrap_or_else(|| ((0.22 * self.t_max as f64).ceil() as u64).max(1))
    }

    /// Ranger21 warm-down length; defaults to ⌈0.28·t_max⌉.
    pub fn warmdown_steps(&self) -> u64 {
        self.t_wdown
            .unwrap_or_else(|| ((0.28 * self.t_max as f64).ceil() as u64).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, reason: impl Into<String>) -> Error {
            Error::Hyperparameter {
                name,
                reason: reason.into(),
            }
        }
        let positive = [
            ("lr", self.lr),
            ("eps", self.eps),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps_c", self.eps_c),
            ("tau_c", self.tau_c),
            ("q_cap", self.q_cap),
            ("e", self.e),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(name, format!("must be > 0, got {v}")));
            }
        }
        let unit = [
            ("momentum", self.momentum),
            ("beta0", self.beta0),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
            ("beta_la", self.beta_la),
        ];
        for (name, v) in unit {
            if !(0.0..1.0).contains(&v) {
                return Err(bad(name, format!("must lie in [0, 1), got {v}")));
            }
        }
        let nonneg = [
            ("weight_decay", self.weight_decay),
            ("sigma", self.sigma),
            ("delta", self.delta),
            ("alpha", self.alpha),
            ("gamma_l", self.gamma_l),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(name, format!("must be >= 0, got {v}")));
            }
        }
        if self.gamma_l > self.gamma_u {
            return Err(bad("gamma_l", "must not exceed gamma_u"));
        }
        if self.k == 0 {
            return Err(bad("k", "must be >= 1"));
        }
        if self.ns_iters == 0 {
            return Err(bad("ns_iters", "must be >= 1"));
        }
        if self.hessian_samples == 0 {
            return Err(bad("hessian_samples", "must be >= 1"));
        }
        if self.t_max == 0 {
            return Err(bad("t_max", "must be >= 1"));
        }
        let (wup, wdown) = (self.warmup_steps(), self.warmdown_steps());
        if wup == 0 || wup > self.t_max {
            return Err(bad("t_wup", format!("must lie in [1, t_max], got {wup}")));
        }
        if wdown == 0 || wdown > self.t_max {
            return Err(bad("t_wdown", format!("must lie in [1, t_max], got {wdown}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_defaults() {
        let adam = Hyperparameters::defaults_for(OptimizerId::Adam);
        assert_eq!((adam.lr, adam.eps, adam.beta1, adam.beta2), (1e-3, 1e-8, 0.9, 0.999));
        let nadam = Hyperparameters::defaults_for(OptimizerId::Nadam);
        assert_eq!((nadam.beta1, nadam.beta2, nadam.eps), (0.975, 0.999, 1e-8));
        let af = Hyperparameters::defaults_for(OptimizerId::Adafactor);
        assert_eq!((af.eps1, af.eps2, af.tau_c, af.e), (1e-30, 1e-3, 1.0, 0.8));
        let adan = Hyperparameters::defaults_for(OptimizerId::Adan);
        assert_eq!((adan.beta1, adan.beta2, adan.beta3, adan.weight_decay), (0.02, 0.08, 0.01, 0.02));
        let sophia = Hyperparameters::defaults_for(OptimizerId::Sophia);
        assert_eq!((sophia.beta1, sophia.beta2, sophia.eps, sophia.weight_decay), (0.96, 0.99, 1e-12, 0.02));
        assert_eq!(sophia.k, 10);
        let r21 = Hyperparameters::defaults_for(OptimizerId::Ranger21);
        assert_eq!(r21.k, 5);
        assert_eq!((r21.weight_decay, r21.tau_c, r21.eps, r21.eps_c), (1e-4, 1e-2, 1e-8, 1e-3));
        assert_eq!((r21.beta0, r21.beta1, r21.beta2, r21.beta_la), (0.9, 0.9, 0.999, 0.5));
        assert_eq!(Hyperparameters::defaults_for(OptimizerId::Sam).sigma, 0.05);
    }

    #[test]
    fn ranger21_split_defaults() {
        let h = Hyperparameters { t_max: 1000, ..Default::default() };
        assert_eq!((h.warmup_steps(), h.warmdown_steps()), (220, 280));
        let tiny = Hyperparameters { t_max: 1, ..Default::default() };
        assert_eq!((tiny.warmup_steps(), tiny.warmdown_steps()), (1, 1));
    }

    #[test]
    fn validation() {
        assert!(Hyperparameters::default().validate().is_ok());
        assert!(Hyperparameters { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(Hyperparameters { beta2: 1.0, ..Default::default() }.validate().is_err());
        assert!(Hyperparameters { k: 0, ..Default::default() }.validate().is_err());
        assert!(Hyperparameters { gamma_l: 2.0, gamma_u: 1.0, ..Default::default() }
            .validate()
            .is_err());
        assert!(Hyperparameters { weight_decay: -1.0, ..Default::default() }.validate().is_err());
    }
}
