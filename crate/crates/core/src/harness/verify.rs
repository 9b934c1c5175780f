use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::RunError;
use crate::diagnostics::{
    full_batch_trajectory, max_relative_gap, momentum_l2_decomposition, rescaled_trajectory_check,
    total_decay_effect, weight_decay_rate, DecayMonitor, MomentumTrace, StabilityTracker,
};
use crate::error::Result;
use crate::numerics::{ParamVector, RandomSource};
use crate::optim::{make_optimizer, DecayMode, HyperParams, OptimizerKind, OptimizerState, SwdFactor};
use crate::problems::{
    gradient_check, logistic_problem, make_linear_teacher, make_two_moons, mlp_problem, Activation,
    LogisticProblem, MinibatchView, Problem, QuadraticProblem,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Propositions,
    Equivalences,
    Gradients,
    All,
}

impl FromStr for Suite {
    type Err = RunError;

    fn from_str(s: &str) -> std::result::Result<Self, RunError> {
        match s {
            "propositions" => Ok(Suite::Propositions),
            "equivalences" => Ok(Suite::Equivalences),
            "gradients" => Ok(Suite::Gradients),
            "all" => Ok(Suite::All),
            other => Err(RunError::Config(format!(
                "unknown suite `{other}` (expected propositions, equivalences, gradients or all)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Propositions => "propositions",
            Suite::Equivalences => "equivalences",
            Suite::Gradients => "gradients",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

/// Knobs for mutation testing of the suite itself.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VerifyOptions {
    /// Replaces the stable-decay correction used by the SGD re-tuning check.
    pub swd_factor: Option<SwdFactor>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub measured: f64,
    /// `"<="` or `">"`.
    pub comparison: &'static str,
    pub tolerance: f64,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn at_most(suite: Suite, name: &str, tol: f64, measured: Result<f64>) -> Check {
    finish(suite, name, "<=", tol, measured, |m| m <= tol)
}

fn above(suite: Suite, name: &str, tol: f64, measured: Result<f64>) -> Check {
    finish(suite, name, ">", tol, measured, |m| m > tol)
}

fn finish(
    suite: Suite,
    name: &str,
    comparison: &'static str,
    tolerance: f64,
    measured: Result<f64>,
    ok: impl Fn(f64) -> bool,
) -> Check {
    let (measured, error) = match measured {
        Ok(m) => (m, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    Check {
        suite,
        name: name.into(),
        measured,
        comparison,
        tolerance,
        passed: error.is_none() && ok(measured),
        error,
    }
}

fn logistic(dim: usize, seed: u64) -> Result<LogisticProblem> {
    logistic_problem(make_linear_teacher(300, dim, 0.1, seed)?.standardized())
}

fn pv(values: &[f64]) -> ParamVector {
    ParamVector::new(values.to_vec()).expect("finite literal")
}

/// Runs `steps` full-batch steps and returns the per-step `Σc²` series plus
/// the analytic `Σv̂` or `Σv̂/v̄` series.
fn coeff_series(kind: OptimizerKind, mode: DecayMode, problem: &dyn Problem, steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let hp = HyperParams::default().with_lambda(0.0005);
    let mut opt = make_optimizer(kind, problem.dim(), hp, mode)?;
    let mut theta = RandomSource::new(17).normal_vector(problem.dim(), 0.5);
    let batch = MinibatchView::full(problem.train_size());
    let (mut vector, mut analytic) = (Vec::new(), Vec::new());
    for _ in 0..steps {
        let (_, g) = problem.loss_grad(&theta, &batch)?;
        let out = opt.step(&theta, &g, hp.eta)?;
        let rate = weight_decay_rate(kind, mode, opt.state(), &hp, hp.eta, None)?.expect("defined");
        vector.push(rate.coeff_sq_norm());
        analytic.push(crate::diagnostics::coeff_sq_norm(kind, mode, opt.state()).expect("adam family"));
        theta = out.theta_next;
    }
    Ok((vector, analytic))
}

fn relative_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean.abs()
}

fn propositions() -> Vec<Check> {
    let s = Suite::Propositions;
    let mut checks = Vec::new();

    checks.push(at_most(s, "vanilla decay rate tracks the learning rate", 1e-12, (|| {
        let hp = HyperParams::default().with_beta1(0.0).with_lambda(0.001);
        let state = OptimizerState::new(1);
        let r = |eta| -> Result<f64> {
            Ok(weight_decay_rate(OptimizerKind::Sgd, DecayMode::Vanilla, &state, &hp, eta, None)?
                .expect("defined")
                .present()[0])
        };
        Ok((r(0.1)? - 0.99).abs().max((r(0.01)? - 0.9).abs()))
    })()));

    checks.push(at_most(s, "momentum buffer splits into gradient and decay parts", 1e-10, (|| {
        let p = logistic(8, 21)?;
        let hp = HyperParams::default().with_eta(0.1).with_lambda(0.01);
        let theta0 = RandomSource::new(5).normal_vector(8, 1.0);
        let trace = MomentumTrace::record(&p, &hp, &theta0, 500)?;
        Ok(momentum_l2_decomposition(&trace)
            .iter()
            .map(|d| d.reconstruction_error)
            .fold(0.0, f64::max))
    })()));

    let p = logistic(10, 22);
    let series = |kind, mode| -> Result<(Vec<f64>, Vec<f64>)> {
        coeff_series(kind, mode, p.as_ref().map_err(Clone::clone)?, 2000)
    };
    let adamw = series(OptimizerKind::Adam, DecayMode::Decoupled);
    let adams = series(OptimizerKind::Adam, DecayMode::Stable);
    checks.push(at_most(s, "AdamW coefficient norm equals sum of v_hat", 1e-12, adamw.clone().map(|(v, a)| {
        v.iter().zip(&a).map(|(x, y)| (x - y).abs() / y).fold(0.0, f64::max)
    })));
    checks.push(above(s, "AdamW coefficient norm varies over time", 1e-3, adamw.map(|(v, _)| relative_std(&v))));
    checks.push(at_most(s, "AdamS coefficient norm equals dimension", 1e-9, adams.clone().map(|(v, _)| {
        v.iter().map(|x| (x - 10.0).abs() / 10.0).fold(0.0, f64::max)
    })));
    checks.push(at_most(s, "AdamS coefficient norm is constant", 1e-12, adams.map(|(v, _)| relative_std(&v))));

    checks.push(at_most(s, "rescaled coordinates reproduce decayed iterates", 1e-8, (|| {
        let q = QuadraticProblem::random(10, 2)?;
        let hp = HyperParams::default().with_eta(0.1).with_lambda(0.1);
        let theta0 = RandomSource::new(2).normal_vector(10, 1.0);
        rescaled_trajectory_check(&q, &hp, &theta0, 200)
    })()));

    checks.push(at_most(s, "zero-gradient AdamW contracts every dimension equally", 1e-12, (|| {
        let hp = HyperParams::default().with_eta(0.001).with_lambda(0.5);
        let theta0 = pv(&[1.0, -3.0, 0.25, 7.0]);
        let mut opt = make_optimizer(OptimizerKind::Adam, 4, hp, DecayMode::Decoupled)?;
        let mut monitor = DecayMonitor::new(&opt);
        let mut theta = theta0.clone();
        let zero = ParamVector::zeros(4);
        let q = 1.0 - hp.eta * hp.lambda;
        let mut worst: f64 = 0.0;
        for t in 1..=1000 {
            let out = opt.step(&theta, &zero, hp.eta)?;
            monitor.observe(&opt, &theta, &out, hp.eta)?;
            theta = out.theta_next;
            let expected = q.powi(t);
            for i in 0..4 {
                worst = worst.max((theta[i] / theta0[i] - expected).abs() / expected);
            }
            worst = worst.max((monitor.rho().unwrap_or(f64::NAN) - expected).abs() / expected);
        }
        Ok(worst)
    })()));

    checks.push(at_most(s, "total decay depends only on eta*lambda", 1e-12, (|| {
        let base: Vec<(f64, f64, f64)> = (0..500).map(|t| (0.1 / (1.0 + 0.01 * t as f64), 0.05, 1.0)).collect();
        let a = total_decay_effect(&base)?;
        let mut worst: f64 = 0.0;
        for k in [2.0, 4.0, 10.0] {
            let scaled: Vec<_> = base.iter().map(|&(e, l, s)| (e / k, l * k, s)).collect();
            worst = worst.max((total_decay_effect(&scaled)? - a).abs() / a);
        }
        Ok(worst)
    })()));

    checks.push(at_most(s, "plain SGD decay is flagged stable", 0.0, (|| {
        let p = logistic(6, 23)?;
        let hp = HyperParams::default().with_eta(0.1).with_beta1(0.0).with_lambda(0.01);
        let mut opt = make_optimizer(OptimizerKind::Sgd, 6, hp, DecayMode::Plain)?;
        let mut monitor = DecayMonitor::new(&opt);
        let mut tracker = StabilityTracker::default();
        let mut theta = ParamVector::filled(6, 0.3);
        let batch = MinibatchView::full(p.train_size());
        for _ in 0..200 {
            let (_, g) = p.loss_grad(&theta, &batch)?;
            let out = opt.step(&theta, &g, hp.eta)?;
            tracker.push(&monitor.observe(&opt, &theta, &out, hp.eta)?);
            theta = out.theta_next;
        }
        Ok(if tracker.report().stable { 0.0 } else { 1.0 })
    })()));

    checks
}

fn equivalences(options: &VerifyOptions) -> Vec<Check> {
    let s = Suite::Equivalences;
    let mut checks = Vec::new();

    checks.push(at_most(s, "vanilla decay at eta*lambda equals plain decay", 1e-12, (|| {
        let q = QuadraticProblem::random(10, 6)?;
        let theta0 = RandomSource::new(6).normal_vector(10, 1.0);
        let hp = HyperParams::default().with_eta(0.05).with_lambda(0.1).with_beta1(0.0);
        let plain = full_batch_trajectory(&q, OptimizerKind::Sgd, DecayMode::Plain, &hp, &theta0, 1000)?;
        let vanilla_hp = hp.with_lambda(hp.eta * hp.lambda);
        let vanilla = full_batch_trajectory(&q, OptimizerKind::Sgd, DecayMode::Vanilla, &vanilla_hp, &theta0, 1000)?;
        Ok(max_relative_gap(&vanilla, &plain))
    })()));

    let p = logistic(8, 31);
    let theta0 = RandomSource::new(31).normal_vector(8, 1.0);
    let sgd = HyperParams::default().with_eta(0.05).with_beta1(0.9).with_lambda(0.01);
    let lambda_w = HyperParams::default().with_beta1(0.9).swd_scale(0) * sgd.lambda;

    checks.push(at_most(s, "SGDS at lambda equals SGDW at re-tuned lambda", 1e-15, (|| {
        let p = p.as_ref().map_err(Clone::clone)?;
        let mut stable_hp = sgd;
        if let Some(f) = options.swd_factor {
            stable_hp = stable_hp.with_swd_factor(f);
        }
        let stable = full_batch_trajectory(p, OptimizerKind::Sgd, DecayMode::Stable, &stable_hp, &theta0, 100)?;
        let decoupled = full_batch_trajectory(p, OptimizerKind::Sgd, DecayMode::Decoupled, &sgd.with_lambda(lambda_w), &theta0, 100)?;
        Ok(max_relative_gap(&stable, &decoupled))
    })()));

    checks.push(above(s, "SGD with L2 departs from SGDS under momentum", 1e-6, (|| {
        let p = p.as_ref().map_err(Clone::clone)?;
        let stable = full_batch_trajectory(p, OptimizerKind::Sgd, DecayMode::Stable, &sgd, &theta0, 100)?;
        let l2 = full_batch_trajectory(p, OptimizerKind::Sgd, DecayMode::L2, &sgd, &theta0, 100)?;
        Ok(max_relative_gap(&l2, &stable))
    })()));

    checks.push(at_most(s, "TF-style and heavy-ball SGD coincide", 1e-12, (|| {
        let q = QuadraticProblem::random(10, 7)?;
        let theta0 = RandomSource::new(7).normal_vector(10, 1.0);
        let hp = HyperParams::default().with_eta(0.01).with_lambda(0.0);
        let hbm = full_batch_trajectory(&q, OptimizerKind::Sgd, DecayMode::None, &hp, &theta0, 1000)?;
        let tf = full_batch_trajectory(&q, OptimizerKind::TfSgd, DecayMode::None, &hp, &theta0, 1000)?;
        Ok(max_relative_gap(&tf, &hbm))
    })()));

    checks.push(at_most(s, "plain SGD converges to the ridge solution", 1e-6, (|| {
        let q = QuadraticProblem::random(10, 8)?;
        let hp = HyperParams::default().with_eta(0.05).with_lambda(0.1).with_beta1(0.0);
        let theta0 = RandomSource::new(8).normal_vector(10, 1.0);
        let traj = full_batch_trajectory(&q, OptimizerKind::Sgd, DecayMode::Plain, &hp, &theta0, 10_000)?;
        let star = q.ridge_solution(hp.lambda)?;
        Ok(traj
            .last()
            .unwrap()
            .iter()
            .zip(star.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    })()));

    checks.push(at_most(s, "stable SGD without momentum equals plain SGD", 0.0, (|| {
        let p = p.as_ref().map_err(Clone::clone)?;
        let hp = sgd.with_beta1(0.0);
        let stable = full_batch_trajectory(p, OptimizerKind::Sgd, DecayMode::Stable, &hp, &theta0, 200)?;
        let plain = full_batch_trajectory(p, OptimizerKind::Sgd, DecayMode::Plain, &hp, &theta0, 200)?;
        Ok(max_relative_gap(&stable, &plain))
    })()));

    checks.push(at_most(s, "AdaiS equals AdaiW", 0.0, (|| {
        let p = p.as_ref().map_err(Clone::clone)?;
        let hp = HyperParams::default().with_eta(0.1).with_lambda(0.01);
        let a = full_batch_trajectory(p, OptimizerKind::Adai, DecayMode::Stable, &hp, &theta0, 200)?;
        let b = full_batch_trajectory(p, OptimizerKind::Adai, DecayMode::Decoupled, &hp, &theta0, 200)?;
        Ok(max_relative_gap(&a, &b))
    })()));

    checks
}

/// Worst relative error of `probes` finite-difference checks, skipping
/// probes closer than `1e-4` to a kink.
fn probe_gradients(problem: &dyn Problem, seed: u64, batch: &MinibatchView, probes: usize, std: f64) -> Result<f64> {
    let mut rng = RandomSource::new(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < probes {
        let theta = if std > 0.0 {
            rng.normal_vector(problem.dim(), std)
        } else {
            problem.initial_point(&mut rng)
        };
        if problem.kink_margin(&theta, batch).is_some_and(|m| m < 1e-4) {
            continue;
        }
        worst = worst.max(gradient_check(problem, &theta, batch, 1e-6)?.rel_error);
        done += 1;
    }
    Ok(worst)
}

fn gradients() -> Vec<Check> {
    let s = Suite::Gradients;
    let batch32 = MinibatchView::new((0..32).collect());
    vec![
        at_most(s, "quadratic gradient matches finite differences", 1e-5, (|| {
            let q = QuadraticProblem::random(10, 3)?;
            probe_gradients(&q, 41, &MinibatchView::full(1), 10, 1.0)
        })()),
        at_most(s, "logistic gradient matches finite differences", 1e-5, (|| {
            let data = make_linear_teacher(200, 20, 0.1, 7)?.standardized();
            let p = LogisticProblem::new(data, true)?;
            probe_gradients(&p, 42, &batch32, 10, 0.5)
        })()),
        at_most(s, "MLP 2-8-2 (tanh) gradient matches finite differences", 1e-5, (|| {
            let p = mlp_problem(make_two_moons(200, 0.1, 5)?.standardized(), &[2, 8, 2], Activation::Tanh)?;
            probe_gradients(&p, 43, &batch32, 10, 0.0)
        })()),
        at_most(s, "MLP 2-16-16-2 (relu) gradient matches finite differences", 1e-5, (|| {
            let p = mlp_problem(make_two_moons(200, 0.1, 6)?.standardized(), &[2, 16, 16, 2], Activation::Relu)?;
            probe_gradients(&p, 44, &batch32, 10, 0.0)
        })()),
    ]
}

/// Runs the checks of `suite`; the report lists every measured value.
pub fn verify(suite: Suite, options: &VerifyOptions) -> VerifyReport {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Propositions | Suite::All) {
        checks.extend(propositions());
    }
    if matches!(suite, Suite::Equivalences | Suite::All) {
        checks.extend(equivalences(options));
    }
    if matches!(suite, Suite::Gradients | Suite::All) {
        checks.extend(gradients());
    }
    VerifyReport {
        suite,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        for suite in [Suite::Propositions, Suite::Equivalences, Suite::Gradients] {
            let report = verify(suite, &VerifyOptions::default());
            let failed: Vec<_> = report.failures().collect();
            assert!(failed.is_empty(), "{failed:#?}");
        }
    }

    #[test]
    fn corrupted_swd_factor_is_caught() {
        let options = VerifyOptions {
            swd_factor: Some(SwdFactor::Fixed(1.0)),
        };
        let report = verify(Suite::Equivalences, &options);
        let failed: Vec<_> = report.failures().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, ["SGDS at lambda equals SGDW at re-tuned lambda"]);
    }

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert_eq!("gradients".parse::<Suite>().unwrap().to_string(), "gradients");
        assert!("props".parse::<Suite>().is_err());
    }
}
