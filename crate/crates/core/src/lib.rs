//! Weight-decay-aware first-order optimizers and the diagnostics that tell
//! them apart.
//!
//! SGD (heavy-ball and TF-style), Adam, AMSGrad and Adai each support a set
//! of [`DecayMode`]s: L2 regularization, decoupled decay, and stable decay,
//! which rescales decoupled decay by the optimizer's effective learning rate
//! so the weight decay rate stays constant over training.
//!
//! ```
//! use swd::{make_optimizer, DecayMode, HyperParams, OptimizerKind, ParamVector};
//!
//! let hp = HyperParams::default().with_eta(0.1).with_lambda(0.01);
//! let mut opt = make_optimizer(OptimizerKind::Sgd, 2, hp, DecayMode::Stable).unwrap();
//! let theta = ParamVector::new(vec![1.0, -1.0]).unwrap();
//! let grad = ParamVector::new(vec![0.5, 0.5]).unwrap();
//! let out = opt.step(&theta, &grad, hp.eta).unwrap();
//! assert!(out.decomposition_error(&theta) < 1e-15);
//! ```

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod optim;
pub mod problems;
pub mod schedule;

pub use error::{Error, Result};
pub use numerics::{ParamVector, RandomSource};
pub use optim::{make_optimizer, DecayMode, HyperParams, Optimizer, OptimizerKind, StepOutput, SwdFactor};
pub use problems::{MinibatchView, Problem};
pub use schedule::{ScheduleKind, ScheduleSpec};
