//! Learning-rate multipliers as pure functions of the iteration index.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::param::ParameterSet;

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    Constant,
    /// Cosine annealing with warm restarts. `periods` lists `T_0, T_1, ...`;
    /// the last period repeats once the list is exhausted.
    CosineRestarts {
        periods: Vec<u64>,
        eta_min: f64,
        eta_max: f64,
    },
    /// Linear warm-up combined with the explore-exploit warm-down.
    Ranger21 {
        t_max: u64,
        t_wup: u64,
        t_wdown: u64,
        beta2: f64,
    },
    /// Relative step `min(q_cap, 1/sqrt(t))`.
    Relative { q_cap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self::constant()
    }
}

impl ScheduleSpec {
    pub fn constant() -> Self {
        Self {
            kind: ScheduleKind::Constant,
        }
    }

    pub fn cosine_restarts(periods: Vec<u64>, eta_min: f64, eta_max: f64) -> Result<Self> {
        let s = Self {
            kind: ScheduleKind::CosineRestarts {
                periods,
                eta_min,
                eta_max,
            },
        };
        s.validate()?;
        Ok(s)
    }

    /// Ranger21 schedule with the default 22% / 28% split.
    pub fn ranger21(t_max: u64, beta2: f64) -> Result<Self> {
        let t_wup = ((0.22 * t_max as f64).ceil() as u64).max(1);
        let t_wdown = ((0.28 * t_max as f64).ceil() as u64).max(1);
        Self::ranger21_with(t_max, t_wup, t_wdown, beta2)
    }

    pub fn ranger21_with(t_max: u64, t_wup: u64, t_wdown: u64, beta2: f64) -> Result<Self> {
        let s = Self {
            kind: ScheduleKind::Ranger21 {
                t_max,
                t_wup,
                t_wdown,
                beta2,
            },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ScheduleKind::Constant => Ok(()),
            ScheduleKind::CosineRestarts {
                periods,
                eta_min,
                eta_max,
            } => {
                if periods.is_empty() || periods.contains(&0) {
                    return Err(Error::Schedule("cosine periods must be non-empty and >= 1".into()));
                }
                if !(0.0 <= *eta_min && eta_min <= eta_max && *eta_max <= 1.0) {
                    return Err(Error::Schedule(format!(
                        "cosine needs 0 <= eta_min <= eta_max <= 1, got {eta_min}, {eta_max}"
                    )));
                }
                Ok(())
            }
            ScheduleKind::Ranger21 {
                t_max,
                t_wup,
                t_wdown,
                beta2,
            } => {
                if *t_wup < 1 || *t_wdown < 1 || t_wup > t_max || t_wdown > t_max {
                    return Err(Error::Schedule(format!(
                        "ranger21 needs 1 <= t_wup, t_wdown <= t_max, got {t_wup}, {t_wdown}, {t_max}"
                    )));
                }
                if !(0.0..1.0).contains(beta2) {
                    return Err(Error::Schedule(format!("beta2 must lie in [0, 1), got {beta2}")));
                }
                Ok(())
            }
            ScheduleKind::Relative { q_cap } => {
                if !(*q_cap > 0.0 && *q_cap <= 1.0) {
                    return Err(Error::Schedule(format!("q_cap must lie in (0, 1], got {q_cap}")));
                }
                Ok(())
            }
        }
    }

    /// Multiplier in `[0, 1]` applied to the base learning rate at step `t >= 1`.
    pub fn eta_at(&self, t: u64) -> f64 {
        let t = t.max(1);
        match &self.kind {
            ScheduleKind::Constant => 1.0,
            ScheduleKind::CosineRestarts {
                periods,
                eta_min,
                eta_max,
            } => {
                let (t_cur, t_i) = cycle_position(periods, t);
                cosine_multiplier(t_cur as f64, t_i as f64, *eta_min, *eta_max)
            }
            ScheduleKind::Ranger21 {
                t_max,
                t_wup,
                t_wdown,
                beta2,
            } => ranger21_multiplier(t, *t_max, *t_wup, *t_wdown, *beta2),
            ScheduleKind::Relative { q_cap } => relative_step(t, *q_cap),
        }
    }
}

/// `η_min + ½(η_max − η_min)(1 + cos(π·T_cur/T_i))`.
pub fn cosine_multiplier(t_cur: f64, t_i: f64, eta_min: f64, eta_max: f64) -> f64 {
    eta_min + 0.5 * (eta_max - eta_min) * (1.0 + (PI * t_cur / t_i).cos())
}

/// `(T_cur, T_i)` for step `t`. A cycle is complete when `T_cur` reaches
/// `T_i`, at which point `T_cur` resets to 0 for the next cycle.
fn cycle_position(periods: &[u64], t: u64) -> (u64, u64) {
    let mut pos = t - 1;
    let mut i = 0usize;
    loop {
        let t_i = periods[i.min(periods.len() - 1)];
        if pos < t_i {
            return (pos, t_i);
        }
        pos -= t_i;
        i += 1;
        // Past the explicit list every cycle has the same length.
        if i >= periods.len() {
            let last = periods[periods.len() - 1];
            return (pos % last, last);
        }
    }
}

/// `min(1, max((1−β2)/2·t, t/t_wup), (t_max−t)/t_wdown)`, clamped at 0 past
/// `t_max`.
pub fn ranger21_multiplier(t: u64, t_max: u64, t_wup: u64, t_wdown: u64, beta2: f64) -> f64 {
    let t_f = t as f64;
    let warm = ((1.0 - beta2) / 2.0 * t_f).max(t_f / t_wup as f64);
    let down = (t_max as f64 - t_f) / t_wdown as f64;
    1f64.min(warm).min(down).max(0.0)
}

/// `min(q_cap, 1/sqrt(t))`.
pub fn relative_step(t: u64, q_cap: f64) -> f64 {
    q_cap.min(1.0 / (t.max(1) as f64).sqrt())
}

/// Root mean square of a slice; 0 for an empty slice.
pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Adafactor's relative learning rate `max(ε2, RMS(w))·min(q_cap, 1/sqrt(t))`
/// with RMS over every weight in `w`.
pub fn adafactor_lr(t: u64, w: &ParameterSet, eps2: f64, q_cap: f64) -> f64 {
    relative_lr(t, w.values(), eps2, q_cap)
}

/// [`adafactor_lr`] over a single tensor.
pub fn relative_lr(t: u64, w: &[f64], eps2: f64, q_cap: f64) -> f64 {
    eps2.max(rms(w)) * relative_step(t, q_cap)
}
