use super::{
    check_inputs, check_overshoot, decay_multiplier, finish, DecayMode, HyperParams,
    OptimizerKind, OptimizerState, StepOutput,
};
use crate::error::Result;
use crate::numerics::ParamVector;

/// Adai: momentum with per-dimension adaptive inertia
/// `β1t = clip(1 − β0·v̂/v̄, 0, 1−ε)`.
///
/// The effective-rate correction of heavy-ball momentum is identically one
/// here, so `decoupled` and `stable` produce the same update (AdaiS = AdaiW).
/// The momentum bias correction uses the per-dimension product of past
/// inertias. If `v̄ = 0` every dimension is treated as average (`v̂/v̄ = 1`).
pub fn adai_step(
    state: &mut OptimizerState,
    theta: &ParamVector,
    grad: &ParamVector,
    hp: &HyperParams,
    mode: DecayMode,
    eta_t: f64,
) -> Result<StepOutput> {
    OptimizerKind::Adai.check_mode(mode)?;
    hp.validate()?;
    check_inputs(state, theta, grad, eta_t)?;
    let mut next = state.clone();
    let t = next.advance()?;
    let (b0, b2, eps, lambda) = (hp.beta0, hp.beta2, hp.epsilon, hp.lambda);
    let bc2 = 1.0 - b2.powi(t);
    let dim = theta.dim();

    let g: Vec<f64> = (0..dim)
        .map(|i| match mode {
            DecayMode::L2 => grad[i] + lambda * theta[i],
            _ => grad[i],
        })
        .collect();
    let v: Vec<f64> = (0..dim)
        .map(|i| b2 * state.v[i] + (1.0 - b2) * g[i] * g[i])
        .collect();
    next.v = ParamVector::checked(v, "second moment")?;
    next.v_hat = next.v.map(|x| x / bc2)?;
    let v_bar = next.v_hat.mean();

    let raw = next.v_hat.map(|x| {
        let ratio = if v_bar > 0.0 { x / v_bar } else { 1.0 };
        1.0 - b0 * ratio
    })?;
    next.beta1_t = raw.clip(0.0, 1.0 - eps)?;

    let multiplier = match mode {
        DecayMode::Decoupled | DecayMode::Stable => decay_multiplier(eta_t, lambda, 1.0),
        _ => 1.0,
    };
    check_overshoot(multiplier)?;

    let mut m = Vec::with_capacity(dim);
    let mut prod = Vec::with_capacity(dim);
    let mut theta_next = Vec::with_capacity(dim);
    let mut mult = Vec::with_capacity(dim);
    let mut grad_step = Vec::with_capacity(dim);
    for i in 0..dim {
        let b1 = next.beta1_t[i];
        let mi = b1 * state.m[i] + (1.0 - b1) * g[i];
        let pi = state.beta1_prod[i] * b1;
        let m_hat = mi / (1.0 - pi);
        let step = -(eta_t * m_hat);
        theta_next.push(multiplier * theta[i] + step);
        mult.push(multiplier);
        grad_step.push(step);
        m.push(mi);
        prod.push(pi);
    }
    next.m = ParamVector::checked(m, "momentum")?;
    next.beta1_prod = ParamVector::checked(prod, "inertia product")?;

    let out = finish(theta_next, mult, grad_step)?;
    *state = next;
    Ok(out)
}
