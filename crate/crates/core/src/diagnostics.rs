//! Weight decay rate `R`, total decay effect `ρ`, and the checks built on them.
//!
//! For every mode the per-step rate is written `R = 1 − λ·c` with a
//! per-dimension coefficient `c`; [`DecayRate`] stores `c` so both the rate
//! and the squared coefficient norm `Σc²` can be read off.

use crate::error::{Error, Result};
use crate::numerics::ParamVector;
use crate::optim::{
    decay_multiplier, sgd_step, stable_scale, DecayMode, HyperParams, Optimizer,
    OptimizerKind, OptimizerState, StepOutput, SwdFactor, THETA_FLOOR,
};
use crate::problems::{MinibatchView, Problem};

/// Running sum `s_t = Σ_{k=1..t} β1^{k−1}·θ_{t−k}` of past iterates, as seen
/// by a momentum buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaHistory {
    beta1: f64,
    sum: Vec<f64>,
    prev: Option<ParamVector>,
    t: u64,
}

impl ThetaHistory {
    pub fn new(beta1: f64, dim: usize) -> Self {
        Self {
            beta1,
            sum: vec![0.0; dim],
            prev: None,
            t: 0,
        }
    }

    /// Feeds `θ_{t−1}`, the iterate the next step starts from.
    pub fn push(&mut self, theta_prev: &ParamVector) -> Result<()> {
        theta_prev.ensure_dim(self.sum.len())?;
        for (s, x) in self.sum.iter_mut().zip(theta_prev.iter()) {
            *s = self.beta1 * *s + x;
        }
        self.prev = Some(theta_prev.clone());
        self.t += 1;
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn weighted_sum(&self) -> &[f64] {
        &self.sum
    }

    pub fn prev(&self) -> Option<&ParamVector> {
        self.prev.as_ref()
    }

    /// Bias-corrected moving average `⟨θ_{t−1}⟩`.
    pub fn ema(&self) -> Option<Vec<f64>> {
        self.prev.as_ref()?;
        let norm = if self.beta1 == 0.0 {
            1.0
        } else {
            (1.0 - self.beta1) / (1.0 - self.beta1.powi(self.t.min(i32::MAX as u64) as i32))
        };
        Some(self.sum.iter().map(|s| s * norm).collect())
    }
}

/// Per-dimension weight decay rate `R_i = 1 − λ·c_i`.
///
/// A `None` coefficient marks a dimension where the rate is not reported
/// (the iterate is too close to zero to divide by).
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRate {
    pub lambda: f64,
    pub coeff: Vec<Option<f64>>,
}

impl DecayRate {
    fn uniform(lambda: f64, c: f64, dim: usize) -> Self {
        Self {
            lambda,
            coeff: vec![Some(c); dim],
        }
    }

    pub fn rate(&self) -> Vec<Option<f64>> {
        self.coeff.iter().map(|c| c.map(|c| 1.0 - self.lambda * c)).collect()
    }

    pub fn present(&self) -> Vec<f64> {
        self.rate().into_iter().flatten().collect()
    }

    /// `Σc²` over the reported dimensions.
    pub fn coeff_sq_norm(&self) -> f64 {
        self.coeff.iter().flatten().map(|c| c * c).sum()
    }

    /// Mean and population std of the reported rates.
    pub fn moments(&self) -> Option<(f64, f64)> {
        let r = self.present();
        if r.is_empty() {
            return None;
        }
        let n = r.len() as f64;
        let mean = r.iter().sum::<f64>() / n;
        let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some((mean, var.sqrt()))
    }
}

/// Weight decay rate of the step that produced `state`.
///
/// Returns `Ok(None)` where the rate is not defined: mode `none`, and L2
/// regularization inside adaptive methods. The L2 heavy-ball rate needs
/// `history` fed with every iterate up to `θ_{t−1}`.
pub fn weight_decay_rate(
    kind: OptimizerKind,
    mode: DecayMode,
    state: &OptimizerState,
    hp: &HyperParams,
    eta_t: f64,
    history: Option<&ThetaHistory>,
) -> Result<Option<DecayRate>> {
    kind.check_mode(mode)?;
    let dim = state.dim();
    let lambda = hp.lambda;
    use DecayMode::*;
    use OptimizerKind::*;
    let rate = match (kind, mode) {
        (_, None) => return Ok(Option::None),
        (Sgd, Vanilla) => DecayRate::uniform(lambda, 1.0 / eta_t, dim),
        (Sgd, Plain) => DecayRate::uniform(lambda, 1.0, dim),
        (Sgd, Decoupled) => DecayRate::uniform(lambda, (1.0 - hp.beta1) / hp.beta3, dim),
        (Sgd, Stable) => {
            let c = match hp.swd_factor {
                SwdFactor::Simplified => 1.0,
                _ => hp.swd_scale(state.t) * (1.0 - hp.beta1) / hp.beta3,
            };
            DecayRate::uniform(lambda, c, dim)
        }
        (Sgd | TfSgd, L2) => {
            let history = history.ok_or(Error::MissingHistory)?;
            let prev = history.prev().ok_or(Error::MissingHistory)?;
            let beta3 = if kind == Sgd { hp.beta3 } else { 1.0 };
            let coeff = history
                .weighted_sum()
                .iter()
                .zip(prev.iter())
                .map(|(s, x)| (x.abs() >= THETA_FLOOR).then(|| beta3 * s / x))
                .collect();
            DecayRate { lambda, coeff }
        }
        (Adam | Amsgrad, Decoupled) => DecayRate {
            lambda,
            coeff: state.v_hat.iter().map(|v| Some(v.sqrt())).collect(),
        },
        (Adam | Amsgrad, Stable) => {
            let s = stable_scale(&state.v_hat, hp.epsilon).unwrap_or(0.0);
            DecayRate {
                lambda,
                coeff: state.v_hat.iter().map(|v| Some(v.sqrt() * s)).collect(),
            }
        }
        (Adam, StablePerdim) => DecayRate {
            lambda,
            coeff: state
                .v_hat
                .iter()
                .map(|&v| Some(if v >= hp.epsilon * hp.epsilon { 1.0 } else { 0.0 }))
                .collect(),
        },
        (Adai, Decoupled | Stable) => DecayRate::uniform(lambda, 1.0, dim),
        (Adam | Amsgrad | Adai, L2) => return Ok(Option::None),
        _ => unreachable!("rejected by check_mode"),
    };
    Ok(Some(rate))
}

/// Closed-form `Σc²` for the Adam family: `Σv̂` for decoupled decay and
/// `Σv̂/v̄` for stable decay. `None` for any other pairing.
pub fn coeff_sq_norm(kind: OptimizerKind, mode: DecayMode, state: &OptimizerState) -> Option<f64> {
    if !matches!(kind, OptimizerKind::Adam | OptimizerKind::Amsgrad) {
        return None;
    }
    let total: f64 = state.v_hat.iter().sum();
    match mode {
        DecayMode::Decoupled => Some(total),
        DecayMode::Stable => {
            let v_bar = state.v_hat.mean();
            (v_bar > 0.0).then(|| total / v_bar)
        }
        _ => None,
    }
}

/// Scale `s_t` such that this step's isotropic decay multiplier is
/// `1 − η_t·λ·s_t`. `None` when the decay is not isotropic.
pub fn isotropic_scale(
    kind: OptimizerKind,
    mode: DecayMode,
    state: &OptimizerState,
    hp: &HyperParams,
    eta_t: f64,
) -> Option<f64> {
    use DecayMode::*;
    match (kind, mode) {
        (_, None) => Some(0.0),
        (_, L2) | (_, StablePerdim) => Option::None,
        (OptimizerKind::Sgd, Vanilla) => Some(1.0 / eta_t),
        (OptimizerKind::Sgd, Stable) => Some(hp.swd_scale(state.t)),
        (OptimizerKind::Adam | OptimizerKind::Amsgrad, Stable) => {
            Some(stable_scale(&state.v_hat, hp.epsilon).unwrap_or(0.0))
        }
        _ => Some(1.0),
    }
}

/// `ρ = Π_t (1 − η_t·λ·s_t)` over `(η_t, λ, s_t)` triples.
pub fn total_decay_effect(log: &[(f64, f64, f64)]) -> Result<f64> {
    let mut rho = 1.0;
    for &(eta, lambda, s) in log {
        let factor = decay_multiplier(eta, lambda, s);
        if factor <= 0.0 {
            return Err(Error::DecayOvershoot { multiplier: factor });
        }
        rho *= factor;
    }
    Ok(rho)
}

/// One step's decay diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRecord {
    pub step: u64,
    pub rate: Option<DecayRate>,
    /// Cumulative total decay effect; `None` for non-isotropic decay.
    pub rho: Option<f64>,
    pub coeff_sq_norm: Option<f64>,
    pub multiplier: ParamVector,
}

impl DecayRecord {
    pub fn rate_moments(&self) -> Option<(f64, f64)> {
        self.rate.as_ref().and_then(DecayRate::moments)
    }
}

/// Builds a [`DecayRecord`] per optimizer step, carrying `ρ` and the iterate
/// history along.
#[derive(Debug, Clone)]
pub struct DecayMonitor {
    history: Option<ThetaHistory>,
    rho: Option<f64>,
}

impl DecayMonitor {
    pub fn new(optimizer: &Optimizer) -> Self {
        let history = (optimizer.mode() == DecayMode::L2).then(|| {
            let beta1 = optimizer.hyper_params().beta1;
            ThetaHistory::new(beta1, optimizer.state().dim())
        });
        Self {
            history,
            rho: Some(1.0),
        }
    }

    /// Call after `optimizer` stepped from `theta_prev` with rate `eta_t`.
    pub fn observe(
        &mut self,
        optimizer: &Optimizer,
        theta_prev: &ParamVector,
        out: &StepOutput,
        eta_t: f64,
    ) -> Result<DecayRecord> {
        if let Some(h) = self.history.as_mut() {
            h.push(theta_prev)?;
        }
        let (kind, mode, hp, state) = (
            optimizer.kind(),
            optimizer.mode(),
            optimizer.hyper_params(),
            optimizer.state(),
        );
        let rate = weight_decay_rate(kind, mode, state, hp, eta_t, self.history.as_ref())?;
        match isotropic_scale(kind, mode, state, hp, eta_t) {
            Some(s) => {
                let factor = decay_multiplier(eta_t, hp.lambda, s);
                let applied = out.decay_multiplier[0];
                if (factor - applied).abs() > 1e-12 * applied.abs() {
                    return Err(Error::InvalidArgument(format!(
                        "decay factor {factor} disagrees with applied multiplier {applied}"
                    )));
                }
                self.rho = self.rho.map(|r| r * factor);
            }
            None => self.rho = None,
        }
        Ok(DecayRecord {
            step: state.t,
            coeff_sq_norm: rate.as_ref().map(DecayRate::coeff_sq_norm),
            rate,
            rho: self.rho,
            multiplier: out.decay_multiplier.clone(),
        })
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }
}

/// Max over `t ≤ T` of `‖θ_t − q^t·w_t‖ / (‖θ_t‖ + 1e-300)`, `q = 1 − ηλ`.
///
/// `θ` follows plain-decay SGD from `theta0`. `w` follows gradient descent on
/// `L^w(w) = L(q^{t−1}·w)` with step `q^{1−2t}·η`, using full-batch gradients
/// and constant `η = hp.eta`.
pub fn rescaled_trajectory_check<P: Problem + ?Sized>(
    problem: &P,
    hp: &HyperParams,
    theta0: &ParamVector,
    steps: usize,
) -> Result<f64> {
    let q = decay_multiplier(hp.eta, hp.lambda, 1.0);
    if q <= 0.0 {
        return Err(Error::DecayOvershoot { multiplier: q });
    }
    let hp = hp.with_beta1(0.0).with_beta3(1.0);
    let batch = MinibatchView::full(problem.train_size());
    let mut state = OptimizerState::new(theta0.dim());
    let mut theta = theta0.clone();
    let mut w = theta0.to_vec();
    let mut worst: f64 = 0.0;
    for t in 1..=steps as i32 {
        let (_, g) = problem.loss_grad(&theta, &batch)?;
        theta = sgd_step(&mut state, &theta, &g, &hp, DecayMode::Plain, hp.eta)?.theta_next;

        let scale_in = q.powi(t - 1);
        let probe = ParamVector::checked(w.iter().map(|x| scale_in * x).collect(), "w")?;
        let (_, gw) = problem.loss_grad(&probe, &batch)?;
        let step = q.powi(1 - 2 * t) * hp.eta;
        for (wi, gi) in w.iter_mut().zip(gw.iter()) {
            *wi -= step * (scale_in * gi);
        }

        let q_t = q.powi(t);
        let diff: f64 = theta
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - q_t * b).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff / (theta.l2_norm() + 1e-300));
    }
    Ok(worst)
}

/// Iterates `θ_0 … θ_T` of a full-batch run at constant `hp.eta`.
pub fn full_batch_trajectory<P: Problem + ?Sized>(
    problem: &P,
    kind: OptimizerKind,
    mode: DecayMode,
    hp: &HyperParams,
    theta0: &ParamVector,
    steps: usize,
) -> Result<Vec<ParamVector>> {
    let batch = MinibatchView::full(problem.train_size());
    let mut opt = crate::optim::make_optimizer(kind, theta0.dim(), *hp, mode)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(theta0.clone());
    for _ in 0..steps {
        let theta = out.last().unwrap();
        let (_, g) = problem.loss_grad(theta, &batch)?;
        let next = opt.step(theta, &g, hp.eta)?.theta_next;
        out.push(next);
    }
    Ok(out)
}

/// `max_t ‖a_t − b_t‖ / ‖b_t‖` over paired iterates (absolute where `b_t = 0`).
pub fn max_relative_gap(a: &[ParamVector], b: &[ParamVector]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let diff = x.iter().zip(y.iter()).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let norm = y.l2_norm();
            if norm > 0.0 {
                diff / norm
            } else {
                diff
            }
        })
        .fold(0.0, f64::max)
}

/// Heavy-ball SGD with L2 regularization, recorded step by step.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumTrace {
    pub hp: HyperParams,
    /// `θ_0 … θ_T`.
    pub thetas: Vec<ParamVector>,
    /// Loss gradients `g_1 … g_T`, without the L2 term.
    pub grads: Vec<ParamVector>,
    /// Momentum buffers `m_1 … m_T` as held by the optimizer.
    pub momenta: Vec<ParamVector>,
}

impl MomentumTrace {
    /// Runs `steps` full-batch steps of L2 heavy-ball SGD at `hp.eta`.
    pub fn record<P: Problem + ?Sized>(
        problem: &P,
        hp: &HyperParams,
        theta0: &ParamVector,
        steps: usize,
    ) -> Result<Self> {
        let batch = MinibatchView::full(problem.train_size());
        let mut state = OptimizerState::new(theta0.dim());
        let mut trace = Self {
            hp: *hp,
            thetas: vec![theta0.clone()],
            grads: Vec::with_capacity(steps),
            momenta: Vec::with_capacity(steps),
        };
        for _ in 0..steps {
            let theta = trace.thetas.last().unwrap();
            let (_, g) = problem.loss_grad(theta, &batch)?;
            let out = sgd_step(&mut state, theta, &g, hp, DecayMode::L2, hp.eta)?;
            trace.grads.push(g);
            trace.momenta.push(state.m.clone());
            trace.thetas.push(out.theta_next);
        }
        Ok(trace)
    }
}

/// One step of the momentum decomposition `m_t = m_t^grad + decay_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionStep {
    /// `λ·β3·Σ_{k=1..t} β1^{t−k}·θ_{k−1}`.
    pub decay_part: Vec<f64>,
    /// `β3·Σ_{k=1..t} β1^{t−k}·g_k`.
    pub grad_part: Vec<f64>,
    /// `‖m_t − grad_part − decay_part‖ / (‖grad_part‖ + ‖decay_part‖)`.
    ///
    /// Near a stationary point the two parts cancel and `m_t` vanishes, so the
    /// error is measured against the size of the parts rather than of `m_t`.
    pub reconstruction_error: f64,
}

/// Splits each recorded momentum buffer into its gradient and decay parts by
/// direct summation over the history.
pub fn momentum_l2_decomposition(trace: &MomentumTrace) -> Vec<DecompositionStep> {
    let MomentumTrace { hp, thetas, grads, momenta } = trace;
    let (b1, b3, lambda) = (hp.beta1, hp.beta3, hp.lambda);
    let dim = thetas[0].dim();
    let mut powers = vec![1.0];
    let mut out = Vec::with_capacity(momenta.len());
    for (idx, m) in momenta.iter().enumerate() {
        let t = idx + 1;
        if powers.len() < t {
            let last = *powers.last().unwrap();
            powers.push(last * b1);
        }
        let mut decay_part = vec![0.0; dim];
        let mut grad_part = vec![0.0; dim];
        for k in 1..=t {
            let w = powers[t - k];
            for i in 0..dim {
                decay_part[i] += w * thetas[k - 1][i];
                grad_part[i] += w * grads[k - 1][i];
            }
        }
        let (mut diff, mut sq_d, mut sq_g) = (0.0, 0.0, 0.0);
        for i in 0..dim {
            decay_part[i] *= lambda * b3;
            grad_part[i] *= b3;
            diff += (m[i] - grad_part[i] - decay_part[i]).powi(2);
            sq_d += decay_part[i] * decay_part[i];
            sq_g += grad_part[i] * grad_part[i];
        }
        let norm = sq_d.sqrt() + sq_g.sqrt();
        let reconstruction_error = if norm > 0.0 { diff.sqrt() / norm } else { diff.sqrt() };
        out.push(DecompositionStep {
            decay_part,
            grad_part,
            reconstruction_error,
        });
    }
    out
}

/// Mean, population std, min and max of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats {
    pub count: u64,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl SeriesStats {
    /// `std / |mean|`, or `std` when the mean is zero.
    pub fn relative_std(&self) -> f64 {
        if self.mean == 0.0 {
            self.std
        } else {
            self.std / self.mean.abs()
        }
    }
}

/// Welford accumulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for RunningStats {
    fn default() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn summary(&self) -> Option<SeriesStats> {
        (self.count > 0).then(|| SeriesStats {
            count: self.count,
            mean: self.mean,
            std: (self.m2 / self.count as f64).max(0.0).sqrt(),
            min: self.min,
            max: self.max,
        })
    }
}

/// Relative std of `Σc²` at or below which a decay scheme counts as stable.
pub const STABLE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub coeff_sq_norm: Option<SeriesStats>,
    pub r_mean: Option<SeriesStats>,
    pub r_std: Option<SeriesStats>,
    pub stable: bool,
}

/// Streaming form of [`stability_report`].
#[derive(Debug, Clone, Default)]
pub struct StabilityTracker {
    records: u64,
    undefined: bool,
    coeff: RunningStats,
    r_mean: RunningStats,
    r_std: RunningStats,
}

impl StabilityTracker {
    pub fn push(&mut self, record: &DecayRecord) {
        self.records += 1;
        match record.coeff_sq_norm {
            Some(c) => self.coeff.push(c),
            None => self.undefined = true,
        }
        if let Some((mean, std)) = record.rate_moments() {
            self.r_mean.push(mean);
            self.r_std.push(std);
        }
    }

    pub fn report(&self) -> StabilityReport {
        let coeff_sq_norm = if self.undefined { None } else { self.coeff.summary() };
        let stable = self.records >= 2
            && coeff_sq_norm.is_some_and(|s| s.relative_std() <= STABLE_THRESHOLD);
        StabilityReport {
            coeff_sq_norm,
            r_mean: self.r_mean.summary(),
            r_std: self.r_std.summary(),
            stable,
        }
    }
}

/// Descriptive statistics over a run; needs at least two records.
pub fn stability_report(records: &[DecayRecord]) -> Result<StabilityReport> {
    if records.len() < 2 {
        return Err(Error::InvalidArgument(
            "stability report needs at least two records".into(),
        ));
    }
    let mut tracker = StabilityTracker::default();
    records.iter().for_each(|r| tracker.push(r));
    Ok(tracker.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RandomSource;
    use crate::optim::make_optimizer;
    use crate::problems::{
        logistic_problem, make_linear_teacher, quadratic_problem, QuadraticProblem,
    };
    use crate::schedule::{ScheduleKind, ScheduleSpec};

    fn pv(values: &[f64]) -> ParamVector {
        ParamVector::new(values.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    fn adam_state(v_hat: &[f64]) -> OptimizerState {
        let mut s = OptimizerState::new(v_hat.len());
        s.v_hat = pv(v_hat);
        s.t = 1;
        s
    }

    #[test]
    fn vanilla_rate_follows_schedule() {
        let hp = HyperParams::default().with_beta1(0.0).with_lambda(0.001);
        let state = OptimizerState::new(3);
        let before = weight_decay_rate(OptimizerKind::Sgd, DecayMode::Vanilla, &state, &hp, 0.1, None)
            .unwrap()
            .unwrap();
        let after = weight_decay_rate(OptimizerKind::Sgd, DecayMode::Vanilla, &state, &hp, 0.01, None)
            .unwrap()
            .unwrap();
        assert!(before.present().iter().all(|r| close(*r, 0.99, 1e-15)));
        assert!(after.present().iter().all(|r| close(*r, 0.9, 1e-15)));
    }

    #[test]
    fn vanilla_coefficient_scales_by_milestone_factor() {
        let spec = ScheduleSpec::new(
            ScheduleKind::Milestones { milestones: vec![2], decay_factor: 0.1 },
            0.1,
            5,
        )
        .unwrap();
        let hp = HyperParams::default().with_beta1(0.0).with_lambda(0.001);
        let state = OptimizerState::new(1);
        let c = |epoch| {
            weight_decay_rate(OptimizerKind::Sgd, DecayMode::Vanilla, &state, &hp, spec.lr_at(epoch, 0), None)
                .unwrap()
                .unwrap()
                .coeff[0]
                .unwrap()
        };
        assert!(close(c(1) / c(2), 0.1, 1e-15));
    }

    #[test]
    fn adamw_and_adams_rates() {
        let state = adam_state(&[1.0, 4.0]);
        let hp = HyperParams::default().with_lambda(0.1);
        let w = weight_decay_rate(OptimizerKind::Adam, DecayMode::Decoupled, &state, &hp, 1e-3, None)
            .unwrap()
            .unwrap();
        let r = w.present();
        assert!(close(r[0], 0.9, 1e-15) && close(r[1], 0.8, 1e-15));

        let s = weight_decay_rate(OptimizerKind::Adam, DecayMode::Stable, &state, &hp, 1e-3, None)
            .unwrap()
            .unwrap();
        let c: Vec<f64> = s.coeff.iter().flatten().copied().collect();
        assert!(close(c[0], 0.632456, 1e-6) && close(c[1], 1.264911, 1e-6));
        let r = s.present();
        assert!(close(r[0], 0.936754, 1e-6) && close(r[1], 0.873509, 1e-6));
        assert!(close(s.coeff_sq_norm(), 2.0, 1e-14));
    }

    #[test]
    fn coeff_sq_norm_examples() {
        let state = adam_state(&[1.0, 4.0]);
        assert_eq!(coeff_sq_norm(OptimizerKind::Adam, DecayMode::Decoupled, &state), Some(5.0));
        assert!(close(coeff_sq_norm(OptimizerKind::Adam, DecayMode::Stable, &state).unwrap(), 2.0, 1e-15));
        assert_eq!(coeff_sq_norm(OptimizerKind::Sgd, DecayMode::Stable, &state), None);

        let mut rng = RandomSource::new(11);
        let v: Vec<f64> = (0..1000).map(|_| rng.uniform_range(1e-6, 3.0)).collect();
        let state = adam_state(&v);
        let hp = HyperParams::default();
        let analytic = coeff_sq_norm(OptimizerKind::Adam, DecayMode::Stable, &state).unwrap();
        let vector = weight_decay_rate(OptimizerKind::Adam, DecayMode::Stable, &state, &hp, 1e-3, None)
            .unwrap()
            .unwrap()
            .coeff_sq_norm();
        assert!(close(analytic, 1000.0, 1e-9));
        assert!(close(vector, 1000.0, 1e-9));
    }

    #[test]
    fn undefined_rates() {
        let state = adam_state(&[1.0]);
        let hp = HyperParams::default();
        for (kind, mode) in [
            (OptimizerKind::Adam, DecayMode::L2),
            (OptimizerKind::Adai, DecayMode::L2),
            (OptimizerKind::Sgd, DecayMode::None),
        ] {
            assert_eq!(weight_decay_rate(kind, mode, &state, &hp, 0.1, None).unwrap(), None);
        }
        assert_eq!(
            weight_decay_rate(OptimizerKind::Sgd, DecayMode::L2, &state, &hp, 0.1, None),
            Err(Error::MissingHistory)
        );
    }

    #[test]
    fn l2_rate_matches_prop_form_and_floors() {
        let hp = HyperParams::default().with_beta1(0.9).with_lambda(0.1);
        let mut h = ThetaHistory::new(0.9, 2);
        h.push(&pv(&[1.0, 0.0])).unwrap();
        h.push(&pv(&[0.99, 0.0])).unwrap();
        let mut state = OptimizerState::new(2);
        state.t = 2;
        let r = weight_decay_rate(OptimizerKind::Sgd, DecayMode::L2, &state, &hp, 0.1, Some(&h))
            .unwrap()
            .unwrap();
        // β3·((1−β1²)/(1−β1))·⟨θ_1⟩/θ_1 with ⟨θ_1⟩ the bias-corrected EMA.
        let ema = h.ema().unwrap()[0];
        let expected = (1.0 - 0.81) / 0.1 * ema / 0.99;
        assert!(close(r.coeff[0].unwrap(), expected, 1e-14));
        assert!(close(r.coeff[0].unwrap(), 1.89 / 0.99, 1e-14));
        assert_eq!(r.coeff[1], None);
    }

    #[test]
    fn total_effect_examples() {
        let rho = total_decay_effect(&[(0.1, 0.5, 1.0); 3]).unwrap();
        assert!(close(rho, 0.857375, 1e-15));
        assert_eq!(total_decay_effect(&[(0.1, 0.0, 1.0); 50]).unwrap(), 1.0);
        assert!(matches!(
            total_decay_effect(&[(1.0, 2.0, 1.0)]),
            Err(Error::DecayOvershoot { .. })
        ));
    }

    #[test]
    fn rho_matches_zero_gradient_contraction() {
        let hp = HyperParams::default().with_eta(0.001).with_lambda(0.5);
        for (kind, mode) in [
            (OptimizerKind::Adam, DecayMode::Decoupled),
            (OptimizerKind::Sgd, DecayMode::Decoupled),
            (OptimizerKind::Sgd, DecayMode::Stable),
        ] {
            let theta0 = pv(&[1.0, -2.0, 0.5]);
            let mut opt = make_optimizer(kind, 3, hp, mode).unwrap();
            let mut monitor = DecayMonitor::new(&opt);
            let mut theta = theta0.clone();
            let zero = ParamVector::zeros(3);
            for _ in 0..100 {
                let out = opt.step(&theta, &zero, hp.eta).unwrap();
                monitor.observe(&opt, &theta, &out, hp.eta).unwrap();
                theta = out.theta_next;
            }
            let rho = monitor.rho().unwrap();
            for i in 0..3 {
                assert!(close(theta[i] / theta0[i], rho, 1e-12), "{kind} {mode}");
            }
        }
    }

    #[test]
    fn rho_depends_only_on_products() {
        let a: Vec<_> = (0..200).map(|t| (0.1 / (1.0 + t as f64), 0.2, 1.0)).collect();
        let b: Vec<_> = a.iter().map(|&(e, l, s)| (e / 2.0, l * 2.0, s)).collect();
        let (ra, rb) = (total_decay_effect(&a).unwrap(), total_decay_effect(&b).unwrap());
        assert!(close(ra, rb, 1e-12));
    }

    #[test]
    fn rescaled_coordinates_scalar_and_identity() {
        let p = quadratic_problem(vec![vec![1.0]], ParamVector::zeros(1)).unwrap();
        let hp = HyperParams::default().with_eta(0.1).with_lambda(0.1);
        let dev = rescaled_trajectory_check(&p, &hp, &pv(&[1.0]), 100).unwrap();
        assert!(dev <= 1e-9, "{dev}");

        let q = QuadraticProblem::random(4, 2).unwrap();
        let zero = rescaled_trajectory_check(&q, &hp.with_lambda(0.0), &pv(&[1.0, 2.0, 3.0, 4.0]), 50).unwrap();
        assert_eq!(zero, 0.0);

        assert!(rescaled_trajectory_check(&p, &hp.with_lambda(10.0), &pv(&[1.0]), 5).is_err());
    }

    #[test]
    fn decomposition_two_step_example() {
        // L = ½θ² has g = θ; the decay part only depends on the iterates.
        let p = quadratic_problem(vec![vec![1.0]], ParamVector::zeros(1)).unwrap();
        let hp = HyperParams::default().with_eta(0.1).with_lambda(0.1).with_beta1(0.9);
        let mut trace = MomentumTrace::record(&p, &hp, &pv(&[1.0]), 2).unwrap();
        let steps = momentum_l2_decomposition(&trace);
        assert!(close(steps[0].decay_part[0], 0.1, 1e-15));

        trace.thetas[1] = pv(&[0.99]);
        let d = momentum_l2_decomposition(&trace)[1].decay_part[0];
        assert!(close(d, 0.189, 1e-15));
        assert!(steps.iter().all(|s| s.reconstruction_error <= 1e-15));
    }

    #[test]
    fn decomposition_on_logistic_run() {
        let data = make_linear_teacher(200, 5, 0.1, 4).unwrap().standardized();
        let p = logistic_problem(data).unwrap();
        let hp = HyperParams::default().with_eta(0.1).with_lambda(0.01).with_beta1(0.9);
        let theta0 = RandomSource::new(1).normal_vector(5, 1.0);
        let trace = MomentumTrace::record(&p, &hp, &theta0, 500).unwrap();
        let worst = momentum_l2_decomposition(&trace)
            .iter()
            .map(|s| s.reconstruction_error)
            .fold(0.0, f64::max);
        assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn stability_flags() {
        let data = make_linear_teacher(300, 8, 0.1, 9).unwrap().standardized();
        let p = logistic_problem(data).unwrap();
        let run = |kind, mode, hp: HyperParams| {
            let mut opt = make_optimizer(kind, p_dim(&p), hp, mode).unwrap();
            let mut monitor = DecayMonitor::new(&opt);
            let mut theta = RandomSource::new(2).normal_vector(8, 0.1);
            let mut records = Vec::new();
            let batch = MinibatchView::full(p.train_size());
            for _ in 0..200 {
                let (_, g) = p.loss_grad(&theta, &batch).unwrap();
                let out = opt.step(&theta, &g, hp.eta).unwrap();
                records.push(monitor.observe(&opt, &theta, &out, hp.eta).unwrap());
                theta = out.theta_next;
            }
            stability_report(&records).unwrap()
        };
        fn p_dim(p: &impl Problem) -> usize {
            p.dim()
        }
        let adam = HyperParams::default().with_lambda(0.1);
        assert!(run(OptimizerKind::Adam, DecayMode::Stable, adam).stable);
        assert!(!run(OptimizerKind::Adam, DecayMode::Decoupled, adam).stable);
        let sgd = HyperParams::default().with_eta(0.1).with_beta1(0.0).with_lambda(0.01);
        assert!(run(OptimizerKind::Sgd, DecayMode::Plain, sgd).stable);
        assert!(!run(OptimizerKind::Sgd, DecayMode::L2, sgd.with_beta1(0.9)).stable);
        assert!(stability_report(&[]).is_err());
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = RandomSource::new(3).uniform_vector(500).into_vec();
        let mut rs = RunningStats::default();
        xs.iter().for_each(|&x| rs.push(x));
        let s = rs.summary().unwrap();
        let mean = xs.iter().sum::<f64>() / 500.0;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 500.0).sqrt();
        assert!(close(s.mean, mean, 1e-13) && close(s.std, std, 1e-12));
    }
}
