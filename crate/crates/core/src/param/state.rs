use crate::error::{Error, Result};
use crate::kernels::FactoredSecondMoment;
use crate::optimizers::{OptimizerId, OptimizerSpec};
use crate::param::{ParameterLayout, TensorKind};

/// Adafactor's per-tensor second moment: factored for 2-D tensors, dense for
/// everything else.
#[derive(Debug, Clone, PartialEq)]
pub enum SecondMoment {
    Factored(FactoredSecondMoment),
    Dense(Vec<f64>),
}

/// Persistent buffers, one variant per optimizer family. All buffers are flat
/// and layout-aligned unless noted.
#[derive(Debug, Clone, PartialEq)]
pub enum StateBuffers {
    /// SGD keeps nothing.
    Empty,
    /// Velocity `v` (Momentum, NAG).
    Velocity { v: Vec<f64> },
    /// Squared-gradient accumulator `a`.
    Accumulator { a: Vec<f64> },
    /// EMA of squared gradients `b`; Adadelta adds the EMA of squared
    /// updates `c`.
    Rms { b: Vec<f64>, c: Option<Vec<f64>> },
    /// First and second moments (Adam, AdamNC, Nadam, AdamW, Radam, LAMB).
    Moments { m: Vec<f64>, v: Vec<f64> },
    Amsgrad { m: Vec<f64>, v: Vec<f64>, v_max: Vec<f64> },
    /// Adamax infinity-norm `u`.
    Adamax { m: Vec<f64>, u: Vec<f64> },
    /// Adabelief belief EMA `s`.
    Belief { m: Vec<f64>, s: Vec<f64> },
    /// One entry per tensor in layout order.
    Factored { moments: Vec<SecondMoment> },
    /// `g_prev` is absent until the first step.
    Adan {
        m: Vec<f64>,
        v: Vec<f64>,
        n: Vec<f64>,
        g_prev: Option<Vec<f64>>,
    },
    /// Lion's single shared momentum.
    Lion { m: Vec<f64> },
    Sophia { m: Vec<f64>, h: Vec<f64> },
    /// Heavy-ball momentum for 2-D tensors (zero elsewhere) plus AdamW moments
    /// for everything else (zero on 2-D tensors).
    Muon {
        m: Vec<f64>,
        adam_m: Vec<f64>,
        adam_v: Vec<f64>,
    },
    /// PNM keeps `m_{t-1}` and `m_{t-2}`; slow weights are captured from the
    /// weights on the first step.
    Ranger21 {
        m_prev: Vec<f64>,
        m_prev2: Vec<f64>,
        v: Vec<f64>,
        v_max: Vec<f64>,
        slow: Option<Vec<f64>>,
    },
    /// Slow weights `φ` (captured on the first step), inner state, and the
    /// inner-loop counter.
    Lookahead {
        slow: Option<Vec<f64>>,
        inner: Box<OptimizerState>,
        counter: u64,
    },
    /// SAM / ASAM carry only their base optimizer's state.
    Sharpness { base: Box<OptimizerState> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub id: OptimizerId,
    /// Number of completed steps; step `t` is `step_count + 1`.
    pub step_count: u64,
    pub buffers: StateBuffers,
}

impl OptimizerState {
    /// Zero-filled state for `spec` over `layout`.
    pub fn init(spec: &OptimizerSpec, layout: &ParameterLayout) -> Result<Self> {
        let n = layout.len();
        let z = || vec![0.0; n];
        use OptimizerId::*;
        let buffers = match spec.id {
            Sgd => StateBuffers::Empty,
            Momentum | Nag => StateBuffers::Velocity { v: z() },
            Adagrad => StateBuffers::Accumulator { a: z() },
            Rmsprop => StateBuffers::Rms { b: z(), c: None },
            Adadelta => StateBuffers::Rms { b: z(), c: Some(z()) },
            Adam | Adamnc | Nadam | Adamw | Radam | Lamb => StateBuffers::Moments { m: z(), v: z() },
            Amsgrad => StateBuffers::Amsgrad {
                m: z(),
                v: z(),
                v_max: z(),
            },
            Adamax => StateBuffers::Adamax { m: z(), u: z() },
            Adabelief => StateBuffers::Belief { m: z(), s: z() },
            Adafactor => StateBuffers::Factored {
                moments: layout
                    .entries()
                    .iter()
                    .map(|e| match e.kind {
                        TensorKind::Matrix2d => {
                            let (r, c) = e.rows_cols();
                            SecondMoment::Factored(FactoredSecondMoment::zeros(r, c))
                        }
                        _ => SecondMoment::Dense(vec![0.0; e.numel()]),
                    })
                    .collect(),
            },
            Adan => StateBuffers::Adan {
                m: z(),
                v: z(),
                n: z(),
                g_prev: None,
            },
            Lion => StateBuffers::Lion { m: z() },
            Sophia => StateBuffers::Sophia { m: z(), h: z() },
            Muon => StateBuffers::Muon {
                m: z(),
                adam_m: z(),
                adam_v: z(),
            },
            Ranger21 => StateBuffers::Ranger21 {
                m_prev: z(),
                m_prev2: z(),
                v: z(),
                v_max: z(),
                slow: None,
            },
            Lookahead => StateBuffers::Lookahead {
                slow: None,
                inner: Box::new(Self::init(spec.inner_spec()?, layout)?),
                counter: 0,
            },
            Sam | Asam => StateBuffers::Sharpness {
                base: Box::new(Self::init(spec.inner_spec()?, layout)?),
            },
        };
        Ok(Self {
            id: spec.id,
            step_count: 0,
            buffers,
        })
    }

    pub fn step(&self) -> u64 {
        self.step_count + 1
    }
}

/// Zero state for an optimizer named by its config id, using the published
/// defaults (wrappers wrap SGD).
pub fn state_init(optimizer_id: &str, layout: &ParameterLayout) -> Result<OptimizerState> {
    let id: OptimizerId = optimizer_id
        .parse()
        .map_err(|_| Error::UnknownOptimizer(optimizer_id.to_string()))?;
    OptimizerState::init(&OptimizerSpec::with_defaults(id), layout)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn momentum_starts_at_zero() {
        let layout = ParameterLayout::flat(3).unwrap();
        let s = state_init("momentum", &layout).unwrap();
        assert_eq!(s.buffers, StateBuffers::Velocity { v: vec![0.0; 3] });
        assert_eq!(s.step_count, 0);
    }

    #[test]
    fn adamax_u_starts_at_zero() {
        let layout = ParameterLayout::flat(4).unwrap();
        match state_init("adamax", &layout).unwrap().buffers {
            StateBuffers::Adamax { u, .. } => assert!(u.iter().all(|&x| x == 0.0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn adan_prev_gradient_absent() {
        let layout = ParameterLayout::flat(2).unwrap();
        match state_init("adan", &layout).unwrap().buffers {
            StateBuffers::Adan { g_prev, .. } => assert!(g_prev.is_none()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn init_is_deterministic() {
        let layout = ParameterLayout::new(vec![
            crate::param::TensorSpec::matrix("W", 2, 3),
            crate::param::TensorSpec::vector("b", 3),
        ])
        .unwrap();
        for id in OptimizerId::ALL {
            let spec = OptimizerSpec::with_defaults(id);
            assert_eq!(
                OptimizerState::init(&spec, &layout).unwrap(),
                OptimizerState::init(&spec, &layout).unwrap()
            );
        }
    }

    #[test]
    fn unknown_id_rejected() {
        let layout = ParameterLayout::flat(2).unwrap();
        assert!(matches!(state_init("lars", &layout), Err(Error::UnknownOptimizer(_))));
    }
}
