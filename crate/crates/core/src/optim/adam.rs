use super::{
    check_inputs, check_overshoot, decay_multiplier, finish, DecayMode, HyperParams,
    OptimizerKind, OptimizerState, StepOutput,
};
use crate::error::Result;
use crate::numerics::ParamVector;

/// Isotropic stable-decay scale `1/√v̄`, or `None` when `v̄ < ε²`.
///
/// Without any gradient signal the effective learning rate is undefined, so
/// the decay is skipped for that step.
pub fn stable_scale(v_hat: &ParamVector, epsilon: f64) -> Option<f64> {
    let v_bar = v_hat.mean();
    (v_bar >= epsilon * epsilon).then(|| 1.0 / v_bar.sqrt())
}

/// Per-dimension scale `1/√v̂_i`, `None` where `v̂_i < ε²`.
pub fn perdim_scale(v_hat_i: f64, epsilon: f64) -> Option<f64> {
    (v_hat_i >= epsilon * epsilon).then(|| 1.0 / v_hat_i.sqrt())
}

/// Adam (`l2`), AdamW (`decoupled`), AdamS (`stable`) and the per-dimension
/// corrected variant (`stable_perdim`).
pub fn adam_step(
    state: &mut OptimizerState,
    theta: &ParamVector,
    grad: &ParamVector,
    hp: &HyperParams,
    mode: DecayMode,
    eta_t: f64,
) -> Result<StepOutput> {
    adaptive_step(OptimizerKind::Adam, state, theta, grad, hp, mode, eta_t)
}

/// AMSGrad family: as [`adam_step`] but normalizing by the running maximum
/// of the second moment, updated before bias correction.
pub fn amsgrad_step(
    state: &mut OptimizerState,
    theta: &ParamVector,
    grad: &ParamVector,
    hp: &HyperParams,
    mode: DecayMode,
    eta_t: f64,
) -> Result<StepOutput> {
    adaptive_step(OptimizerKind::Amsgrad, state, theta, grad, hp, mode, eta_t)
}

fn adaptive_step(
    kind: OptimizerKind,
    state: &mut OptimizerState,
    theta: &ParamVector,
    grad: &ParamVector,
    hp: &HyperParams,
    mode: DecayMode,
    eta_t: f64,
) -> Result<StepOutput> {
    kind.check_mode(mode)?;
    hp.validate()?;
    check_inputs(state, theta, grad, eta_t)?;
    let mut next = state.clone();
    let t = next.advance()?;
    let (b1, b2, eps, lambda) = (hp.beta1, hp.beta2, hp.epsilon, hp.lambda);
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    let amsgrad = kind == OptimizerKind::Amsgrad;

    let dim = theta.dim();
    let mut m = Vec::with_capacity(dim);
    let mut v = Vec::with_capacity(dim);
    let mut v_max = Vec::with_capacity(dim);
    let mut v_hat = Vec::with_capacity(dim);
    for i in 0..dim {
        let g = if mode == DecayMode::L2 {
            grad[i] + lambda * theta[i]
        } else {
            grad[i]
        };
        let mi = b1 * state.m[i] + (1.0 - b1) * g;
        let vi = b2 * state.v[i] + (1.0 - b2) * g * g;
        let vm = if amsgrad { vi.max(state.v_max[i]) } else { vi };
        m.push(mi);
        v.push(vi);
        v_max.push(vm);
        v_hat.push(if amsgrad { vm } else { vi } / bc2);
    }
    next.m = ParamVector::checked(m, "first moment")?;
    next.v = ParamVector::checked(v, "second moment")?;
    if amsgrad {
        next.v_max = ParamVector::checked(v_max, "second moment max")?;
    }
    next.v_hat = ParamVector::checked(v_hat, "bias-corrected second moment")?;

    let iso = match mode {
        DecayMode::None | DecayMode::L2 | DecayMode::StablePerdim => 1.0,
        DecayMode::Decoupled => decay_multiplier(eta_t, lambda, 1.0),
        DecayMode::Stable => match stable_scale(&next.v_hat, eps) {
            Some(s) => decay_multiplier(eta_t, lambda, s),
            None => 1.0,
        },
        DecayMode::Vanilla | DecayMode::Plain => unreachable!("rejected by check_mode"),
    };
    check_overshoot(iso)?;

    let mut theta_next = Vec::with_capacity(dim);
    let mut mult = Vec::with_capacity(dim);
    let mut grad_step = Vec::with_capacity(dim);
    for i in 0..dim {
        let m_hat = next.m[i] / bc1;
        let step = -(eta_t * m_hat / (next.v_hat[i].sqrt() + eps));
        let mi = if mode == DecayMode::StablePerdim {
            let mi = perdim_scale(next.v_hat[i], eps)
                .map_or(1.0, |s| decay_multiplier(eta_t, lambda, s));
            check_overshoot(mi)?;
            mi
        } else {
            iso
        };
        theta_next.push(mi * theta[i] + step);
        mult.push(mi);
        grad_step.push(step);
    }

    let out = finish(theta_next, mult, grad_step)?;
    *state = next;
    Ok(out)
}
