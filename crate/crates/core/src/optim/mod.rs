//! Weight-decay-aware optimizers.
//!
//! Each family exposes a step function parameterized by a [`DecayMode`]:
//!
//! | mode            | decay term                                   |
//! |-----------------|----------------------------------------------|
//! | `none`          | no decay                                     |
//! | `vanilla`       | `-λ θ` (not scaled by the learning rate)     |
//! | `plain`         | `-η_t λ θ`                                   |
//! | `l2`            | `λ θ` added to the gradient                  |
//! | `decoupled`     | `-η_t λ θ` applied outside the update        |
//! | `stable`        | decoupled decay times the effective-rate correction |
//! | `stable_perdim` | `-η_t λ θ / √v̂` per dimension (Adam only)    |
//!
//! Every step returns a [`StepOutput`] that splits the update into a
//! multiplicative decay part and the remaining gradient displacement.

mod adai;
mod adam;
mod sgd;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ParamVector;

pub use adai::adai_step;
pub use adam::{adam_step, amsgrad_step, perdim_scale, stable_scale};
pub use sgd::{sgd_step, tf_sgd_step};

/// Entries of θ smaller than this have no well-defined multiplicative decay.
pub(crate) const THETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    None,
    Vanilla,
    Plain,
    L2,
    Decoupled,
    Stable,
    StablePerdim,
}

impl DecayMode {
    pub const ALL: [DecayMode; 7] = [
        DecayMode::None,
        DecayMode::Vanilla,
        DecayMode::Plain,
        DecayMode::L2,
        DecayMode::Decoupled,
        DecayMode::Stable,
        DecayMode::StablePerdim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DecayMode::None => "none",
            DecayMode::Vanilla => "vanilla",
            DecayMode::Plain => "plain",
            DecayMode::L2 => "l2",
            DecayMode::Decoupled => "decoupled",
            DecayMode::Stable => "stable",
            DecayMode::StablePerdim => "stable_perdim",
        }
    }
}

impl fmt::Display for DecayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DecayMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DecayMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown decay mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Heavy-ball SGD in the PyTorch convention.
    Sgd,
    /// SGD with the learning rate folded into the momentum buffer.
    TfSgd,
    Adam,
    Amsgrad,
    Adai,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [
        OptimizerKind::Sgd,
        OptimizerKind::TfSgd,
        OptimizerKind::Adam,
        OptimizerKind::Amsgrad,
        OptimizerKind::Adai,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::TfSgd => "tf_sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Amsgrad => "amsgrad",
            OptimizerKind::Adai => "adai",
        }
    }

    /// Decay modes defined for this family.
    pub fn supported_modes(self) -> &'static [DecayMode] {
        use DecayMode::*;
        match self {
            OptimizerKind::Sgd => &[None, Vanilla, Plain, L2, Decoupled, Stable],
            OptimizerKind::TfSgd => &[None, L2],
            OptimizerKind::Adam => &[None, L2, Decoupled, Stable, StablePerdim],
            OptimizerKind::Amsgrad => &[None, L2, Decoupled, Stable],
            // Decoupled and stable decay coincide for Adai.
            OptimizerKind::Adai => &[None, L2, Decoupled, Stable],
        }
    }

    pub fn supports(self, mode: DecayMode) -> bool {
        self.supported_modes().contains(&mode)
    }

    pub(crate) fn check_mode(self, mode: DecayMode) -> Result<()> {
        if self.supports(mode) {
            Ok(())
        } else {
            Err(Error::IncompatibleMode { kind: self, mode })
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown optimizer `{s}`")))
    }
}

/// Correction applied to decoupled decay in stable mode for heavy-ball SGD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SwdFactor {
    /// `β3 / (1 - β1)`.
    #[default]
    Simplified,
    /// `β3 (1 - β1^t) / (1 - β1)`, the momentum bias-corrected form.
    BiasCorrected,
    /// A user-supplied constant.
    Fixed(f64),
}

/// Every symbol that appears in the update rules.
///
/// `lambda` is the raw weight decay hyperparameter; its meaning depends on the
/// decay mode it is paired with and is never converted between conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub eta: f64,
    pub lambda: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub epsilon: f64,
    pub beta0: f64,
    pub swd_factor: SwdFactor,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            eta: 0.001,
            lambda: 0.0005,
            beta1: 0.9,
            beta2: 0.999,
            beta3: 1.0,
            epsilon: 1e-8,
            beta0: 0.1,
            swd_factor: SwdFactor::Simplified,
        }
    }
}

impl HyperParams {
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_beta1(mut self, beta1: f64) -> Self {
        self.beta1 = beta1;
        self
    }

    pub fn with_beta2(mut self, beta2: f64) -> Self {
        self.beta2 = beta2;
        self
    }

    pub fn with_beta3(mut self, beta3: f64) -> Self {
        self.beta3 = beta3;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_beta0(mut self, beta0: f64) -> Self {
        self.beta0 = beta0;
        self
    }

    pub fn with_swd_factor(mut self, factor: SwdFactor) -> Self {
        self.swd_factor = factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, value: f64, reason: &'static str) -> Result<()> {
            Err(Error::InvalidHyperParam {
                name,
                value,
                reason,
            })
        }
        let fields = [
            ("eta", self.eta),
            ("lambda", self.lambda),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
            ("epsilon", self.epsilon),
            ("beta0", self.beta0),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return bad(name, value, "must be finite");
            }
        }
        if self.eta <= 0.0 {
            return bad("eta", self.eta, "must be > 0");
        }
        if self.lambda < 0.0 {
            return bad("lambda", self.lambda, "must be >= 0");
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return bad("beta1", self.beta1, "must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return bad("beta2", self.beta2, "must lie in [0, 1)");
        }
        if self.beta3 <= 0.0 {
            return bad("beta3", self.beta3, "must be > 0");
        }
        if self.epsilon <= 0.0 {
            return bad("epsilon", self.epsilon, "must be > 0");
        }
        if self.beta0 <= 0.0 {
            return bad("beta0", self.beta0, "must be > 0");
        }
        if let SwdFactor::Fixed(c) = self.swd_factor {
            if !c.is_finite() || c <= 0.0 {
                return bad("swd_factor", c, "must be finite and > 0");
            }
        }
        Ok(())
    }

    /// Stable-decay correction for heavy-ball SGD after `t` steps.
    pub fn swd_scale(&self, t: u64) -> f64 {
        match self.swd_factor {
            SwdFactor::Simplified => self.beta3 / (1.0 - self.beta1),
            SwdFactor::BiasCorrected => {
                let bc = 1.0 - self.beta1.powi(t.min(i32::MAX as u64) as i32);
                self.beta3 * bc / (1.0 - self.beta1)
            }
            SwdFactor::Fixed(c) => c,
        }
    }
}

/// Per-run optimizer buffers. All vectors start at zero except
/// `beta1_prod`, which starts at one.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// First moment (momentum buffer).
    pub m: ParamVector,
    /// Second-moment EMA.
    pub v: ParamVector,
    /// Running element-wise max of `v` (AMSGrad).
    pub v_max: ParamVector,
    /// Bias-corrected second moment of the latest step.
    pub v_hat: ParamVector,
    /// Per-dimension product of Adai's adaptive inertia.
    pub beta1_prod: ParamVector,
    /// Adai inertia used in the latest step.
    pub beta1_t: ParamVector,
    /// Gradient-only part of `m` in L2 mode.
    pub m_grad: ParamVector,
    /// Decay-only part of `m` in L2 mode.
    pub m_decay: ParamVector,
    /// Number of completed steps.
    pub t: u64,
}

impl OptimizerState {
    pub fn new(dim: usize) -> Self {
        let zeros = ParamVector::zeros(dim);
        Self {
            m: zeros.clone(),
            v: zeros.clone(),
            v_max: zeros.clone(),
            v_hat: zeros.clone(),
            beta1_prod: ParamVector::filled(dim, 1.0),
            beta1_t: zeros.clone(),
            m_grad: zeros.clone(),
            m_decay: zeros,
            t: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// Increments the step counter and returns `t` as a power exponent.
    pub(crate) fn advance(&mut self) -> Result<i32> {
        let t = self.t.checked_add(1).ok_or(Error::StepOverflow)?;
        let exp = i32::try_from(t).map_err(|_| Error::StepOverflow)?;
        self.t = t;
        Ok(exp)
    }
}

/// Result of one optimizer step.
///
/// `theta_next = decay_multiplier ⊙ theta + grad_step` up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub theta_next: ParamVector,
    pub decay_multiplier: ParamVector,
    pub grad_step: ParamVector,
}

impl StepOutput {
    /// Relative error of the multiplicative decomposition against `theta`.
    pub fn decomposition_error(&self, theta: &ParamVector) -> f64 {
        let mut diff = 0.0;
        let mut scale = 0.0;
        for i in 0..theta.dim() {
            let recon = self.decay_multiplier[i] * theta[i] + self.grad_step[i];
            diff += (self.theta_next[i] - recon).powi(2);
            scale += self.theta_next[i].powi(2) + theta[i].powi(2);
        }
        if scale == 0.0 {
            diff.sqrt()
        } else {
            (diff / scale).sqrt()
        }
    }
}

/// Multiplicative decay factor `1 - η_t·(s·λ)`.
///
/// The product `s·λ` is formed first, so a mode with scale `s` and rate `λ`
/// yields bitwise the same factor as scale `1` with rate `s·λ`.
pub fn decay_multiplier(eta_t: f64, lambda: f64, scale: f64) -> f64 {
    1.0 - eta_t * (scale * lambda)
}

pub(crate) fn check_overshoot(multiplier: f64) -> Result<()> {
    if multiplier > 0.0 {
        Ok(())
    } else {
        Err(Error::DecayOvershoot { multiplier })
    }
}

pub(crate) fn check_inputs(
    state: &OptimizerState,
    theta: &ParamVector,
    grad: &ParamVector,
    eta_t: f64,
) -> Result<()> {
    theta.ensure_dim(state.dim())?;
    grad.ensure_dim(state.dim())?;
    if !eta_t.is_finite() || eta_t <= 0.0 {
        return Err(Error::InvalidHyperParam {
            name: "eta_t",
            value: eta_t,
            reason: "scheduled learning rate must be finite and > 0",
        });
    }
    Ok(())
}

/// Builds the output, checking that every vector is finite.
pub(crate) fn finish(
    theta_next: Vec<f64>,
    decay_multiplier: Vec<f64>,
    grad_step: Vec<f64>,
) -> Result<StepOutput> {
    Ok(StepOutput {
        theta_next: ParamVector::checked(theta_next, "theta_next")?,
        decay_multiplier: ParamVector::checked(decay_multiplier, "decay_multiplier")?,
        grad_step: ParamVector::checked(grad_step, "grad_step")?,
    })
}

/// A configured optimizer: family, decay mode, hyperparameters and state.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    mode: DecayMode,
    hp: HyperParams,
    state: OptimizerState,
}

/// Validates the (kind, mode) pairing and returns a zero-initialized optimizer.
pub fn make_optimizer(
    kind: OptimizerKind,
    dim: usize,
    hp: HyperParams,
    mode: DecayMode,
) -> Result<Optimizer> {
    if dim == 0 {
        return Err(Error::EmptyVector);
    }
    kind.check_mode(mode)?;
    hp.validate()?;
    if matches!(mode, DecayMode::Vanilla | DecayMode::Plain) {
        sgd::check_momentum_free(&hp)?;
    }
    Ok(Optimizer {
        kind,
        mode,
        hp,
        state: OptimizerState::new(dim),
    })
}

impl Optimizer {
    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn mode(&self) -> DecayMode {
        self.mode
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    pub fn step(
        &mut self,
        theta: &ParamVector,
        grad: &ParamVector,
        eta_t: f64,
    ) -> Result<StepOutput> {
        let (state, hp, mode) = (&mut self.state, &self.hp, self.mode);
        match self.kind {
            OptimizerKind::Sgd => sgd_step(state, theta, grad, hp, mode, eta_t),
            OptimizerKind::TfSgd => tf_sgd_step(state, theta, grad, hp, mode, eta_t),
            OptimizerKind::Adam => adam_step(state, theta, grad, hp, mode, eta_t),
            OptimizerKind::Amsgrad => amsgrad_step(state, theta, grad, hp, mode, eta_t),
            OptimizerKind::Adai => adai_step(state, theta, grad, hp, mode, eta_t),
        }
    }
}
