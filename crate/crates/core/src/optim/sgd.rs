use super::{
    check_inputs, check_overshoot, decay_multiplier, finish, DecayMode, HyperParams,
    OptimizerKind, OptimizerState, StepOutput, THETA_FLOOR,
};
use crate::error::{Error, Result};
use crate::numerics::ParamVector;

/// Vanilla and plain decay are only defined for momentum-free SGD.
pub(crate) fn check_momentum_free(hp: &HyperParams) -> Result<()> {
    if hp.beta1 != 0.0 {
        return Err(Error::InvalidHyperParam {
            name: "beta1",
            value: hp.beta1,
            reason: "vanilla/plain decay require beta1 = 0",
        });
    }
    if hp.beta3 != 1.0 {
        return Err(Error::InvalidHyperParam {
            name: "beta3",
            value: hp.beta3,
            reason: "vanilla/plain decay require beta3 = 1",
        });
    }
    Ok(())
}

/// Heavy-ball SGD: `m ← β1·m + β3·g`, `θ ← θ − η_t·m`, with the decay term
/// selected by `mode`.
///
/// In `l2` mode the momentum buffer is additionally tracked as two parallel
/// buffers (`m_grad`, `m_decay`) so the decay routed through momentum can be
/// reported in `decay_multiplier`. The update itself uses `m` only.
pub fn sgd_step(
    state: &mut OptimizerState,
    theta: &ParamVector,
    grad: &ParamVector,
    hp: &HyperParams,
    mode: DecayMode,
    eta_t: f64,
) -> Result<StepOutput> {
    OptimizerKind::Sgd.check_mode(mode)?;
    hp.validate()?;
    check_inputs(state, theta, grad, eta_t)?;
    if matches!(mode, DecayMode::Vanilla | DecayMode::Plain) {
        check_momentum_free(hp)?;
    }
    let t = state.t + 1;
    if i32::try_from(t).is_err() {
        return Err(Error::StepOverflow);
    }
    let (b1, b3, lambda) = (hp.beta1, hp.beta3, hp.lambda);

    let multiplier = match mode {
        DecayMode::None => 1.0,
        DecayMode::Vanilla => decay_multiplier(1.0, lambda, 1.0),
        DecayMode::Plain | DecayMode::Decoupled => decay_multiplier(eta_t, lambda, 1.0),
        DecayMode::Stable => decay_multiplier(eta_t, lambda, hp.swd_scale(t)),
        // Steady-state decay through momentum.
        DecayMode::L2 => decay_multiplier(eta_t, lambda, b3 / (1.0 - b1)),
        DecayMode::StablePerdim => unreachable!("rejected by check_mode"),
    };
    check_overshoot(multiplier)?;

    let dim = theta.dim();
    let mut m = Vec::with_capacity(dim);
    let mut theta_next = Vec::with_capacity(dim);
    let mut mult = Vec::with_capacity(dim);
    let mut grad_step = Vec::with_capacity(dim);

    if mode == DecayMode::L2 {
        let mut m_grad = Vec::with_capacity(dim);
        let mut m_decay = Vec::with_capacity(dim);
        for i in 0..dim {
            let g = grad[i] + lambda * theta[i];
            let mi = b1 * state.m[i] + b3 * g;
            let mg = b1 * state.m_grad[i] + b3 * grad[i];
            let md = b1 * state.m_decay[i] + b3 * (lambda * theta[i]);
            theta_next.push(theta[i] - eta_t * mi);
            if theta[i].abs() > THETA_FLOOR {
                mult.push(1.0 - eta_t * md / theta[i]);
                grad_step.push(-(eta_t * mg));
            } else {
                mult.push(1.0);
                grad_step.push(-(eta_t * mi));
            }
            m.push(mi);
            m_grad.push(mg);
            m_decay.push(md);
        }
        state.m_grad = ParamVector::checked(m_grad, "momentum (gradient part)")?;
        state.m_decay = ParamVector::checked(m_decay, "momentum (decay part)")?;
    } else {
        for i in 0..dim {
            let mi = b1 * state.m[i] + b3 * grad[i];
            let step = -(eta_t * mi);
            theta_next.push(multiplier * theta[i] + step);
            mult.push(multiplier);
            grad_step.push(step);
            m.push(mi);
        }
    }

    state.m = ParamVector::checked(m, "momentum")?;
    state.advance()?;
    finish(theta_next, mult, grad_step)
}

/// SGD with the learning rate inside the momentum buffer:
/// `m ← β1·m − η_t·g`, `θ ← θ + m`. Supports `none` and `l2`.
pub fn tf_sgd_step(
    state: &mut OptimizerState,
    theta: &ParamVector,
    grad: &ParamVector,
    hp: &HyperParams,
    mode: DecayMode,
    eta_t: f64,
) -> Result<StepOutput> {
    OptimizerKind::TfSgd.check_mode(mode)?;
    hp.validate()?;
    check_inputs(state, theta, grad, eta_t)?;
    if i32::try_from(state.t + 1).is_err() {
        return Err(Error::StepOverflow);
    }
    let (b1, lambda) = (hp.beta1, hp.lambda);
    if mode == DecayMode::L2 {
        check_overshoot(decay_multiplier(eta_t, lambda, 1.0 / (1.0 - b1)))?;
    }

    let dim = theta.dim();
    let mut m = Vec::with_capacity(dim);
    let mut theta_next = Vec::with_capacity(dim);
    let mut mult = Vec::with_capacity(dim);
    let mut grad_step = Vec::with_capacity(dim);

    if mode == DecayMode::L2 {
        let mut m_grad = Vec::with_capacity(dim);
        let mut m_decay = Vec::with_capacity(dim);
        for i in 0..dim {
            let g = grad[i] + lambda * theta[i];
            let mi = b1 * state.m[i] - eta_t * g;
            let mg = b1 * state.m_grad[i] - eta_t * grad[i];
            let md = b1 * state.m_decay[i] - eta_t * (lambda * theta[i]);
            theta_next.push(theta[i] + mi);
            if theta[i].abs() > THETA_FLOOR {
                mult.push(1.0 + md / theta[i]);
                grad_step.push(mg);
            } else {
                mult.push(1.0);
                grad_step.push(mi);
            }
            m.push(mi);
            m_grad.push(mg);
            m_decay.push(md);
        }
        state.m_grad = ParamVector::checked(m_grad, "momentum (gradient part)")?;
        state.m_decay = ParamVector::checked(m_decay, "momentum (decay part)")?;
    } else {
        for i in 0..dim {
            let mi = b1 * state.m[i] - eta_t * grad[i];
            theta_next.push(theta[i] + mi);
            mult.push(1.0);
            grad_step.push(mi);
            m.push(mi);
        }
    }

    state.m = ParamVector::checked(m, "momentum")?;
    state.advance()?;
    finish(theta_next, mult, grad_step)
}
