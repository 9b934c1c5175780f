use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{num, RunConfig, RunError};
use crate::diagnostics::{DecayMonitor, RunningStats, SeriesStats, StabilityTracker};
use crate::error::Error;
use crate::numerics::{ParamVector, RandomSource};
use crate::optim::{make_optimizer, DecayMode, HyperParams, OptimizerKind};
use crate::problems::EpochSampler;

/// Column order of `log.csv`.
pub const LOG_COLUMNS: [&str; 11] = [
    "step",
    "epoch",
    "eta_t",
    "train_loss",
    "test_loss",
    "theta_norm",
    "grad_norm",
    "r_mean",
    "r_std",
    "coeff_sq_norm",
    "rho",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub step: u64,
    pub epoch: u64,
    pub eta_t: f64,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub theta_norm: f64,
    pub grad_norm: f64,
    pub r_mean: Option<f64>,
    pub r_std: Option<f64>,
    pub coeff_sq_norm: Option<f64>,
    pub rho: Option<f64>,
}

fn cell(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl LogRow {
    fn fields(&self) -> [String; 11] {
        [
            self.step.to_string(),
            self.epoch.to_string(),
            num(self.eta_t),
            num(self.train_loss),
            cell(self.test_loss),
            num(self.theta_norm),
            num(self.grad_norm),
            cell(self.r_mean),
            cell(self.r_std),
            cell(self.coeff_sq_norm),
            cell(self.rho),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatsSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl From<SeriesStats> for StatsSummary {
    fn from(s: SeriesStats) -> Self {
        Self {
            mean: s.mean,
            std: s.std,
            min: s.min,
            max: s.max,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub status: String,
    pub error: Option<String>,
    pub problem: String,
    pub optimizer: OptimizerKind,
    pub mode: DecayMode,
    pub lambda: f64,
    pub eta: f64,
    /// `lambda` converted to the stable-decay convention (see `docs/schema.md`).
    pub lambda_equiv: Option<f64>,
    pub steps: u64,
    pub final_train_loss: Option<f64>,
    pub final_test_loss: Option<f64>,
    pub best_test_loss: Option<f64>,
    pub rho: Option<f64>,
    pub stable: bool,
    pub coeff_sq_norm: Option<StatsSummary>,
    pub r_mean: Option<StatsSummary>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<LogRow>,
    pub summary: RunSummary,
    pub theta: ParamVector,
    /// Step and cause of a numerical abort.
    pub abort: Option<(u64, Error)>,
}

impl RunOutcome {
    pub fn log_csv(&self) -> Result<Vec<u8>, RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(LOG_COLUMNS)?;
        for row in &self.rows {
            w.write_record(row.fields())?;
        }
        w.into_inner().map_err(|e| RunError::Io(std::io::Error::other(e.to_string())))
    }
}

/// Weight decay expressed in the stable-mode convention, so cells of
/// different modes can be compared on one axis.
fn lambda_equiv(kind: OptimizerKind, mode: DecayMode, hp: &HyperParams, sqrt_v_bar: Option<f64>) -> Option<f64> {
    let l = hp.lambda;
    match (kind, mode) {
        (_, DecayMode::None) => Some(0.0),
        (OptimizerKind::Sgd, DecayMode::Vanilla) => Some(l / hp.eta),
        (OptimizerKind::Sgd, DecayMode::Decoupled) => Some(l * (1.0 - hp.beta1) / hp.beta3),
        (OptimizerKind::Adam | OptimizerKind::Amsgrad, DecayMode::Decoupled) => sqrt_v_bar.map(|s| l * s),
        (OptimizerKind::Adam | OptimizerKind::Amsgrad | OptimizerKind::Adai, DecayMode::L2) => None,
        _ => Some(l),
    }
}

fn finite(value: f64, step: u64, context: &'static str) -> Result<f64, (u64, Error)> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err((step, Error::NonFinite { context, index: 0 }))
    }
}

/// Trains according to `config` without touching the filesystem.
///
/// A numerical failure does not return `Err`: the outcome carries the rows
/// logged so far and `abort` is set.
pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    config.validate()?;
    let problem = config.problem.build().map_err(|e| RunError::Config(e.to_string()))?;
    let o = &config.optimizer;
    let mut optimizer = make_optimizer(o.kind, problem.dim(), o.hyper, o.mode)
        .map_err(|e| RunError::Config(e.to_string()))?;
    let n = problem.train_size();
    let sampler = EpochSampler::new(n, config.batch_size.min(n));
    let spe = sampler.batches_per_epoch() as u64;
    let schedule = config.schedule_spec(spe).map_err(|e| RunError::Config(e.to_string()))?;

    let mut init_rng = RandomSource::new(RandomSource::derive_seed(config.seed, 0));
    let mut batch_rng = RandomSource::new(RandomSource::derive_seed(config.seed, 1));
    let mut theta = problem.initial_point(&mut init_rng);
    let mut monitor = DecayMonitor::new(&optimizer);
    let mut stability = StabilityTracker::default();
    let mut sqrt_v_bar = RunningStats::default();
    let mut rows = Vec::new();
    let mut best_test: Option<f64> = None;
    let mut last_test: Option<f64> = None;
    let mut step = 0u64;

    let mut body = || -> Result<(), (u64, Error)> {
        for epoch in 0..config.epochs {
            let batches = sampler.epoch(&mut batch_rng);
            for (k, batch) in batches.iter().enumerate() {
                let eta_t = schedule.lr_at(epoch, k as u64);
                let (loss, grad) = problem.loss_grad(&theta, batch).map_err(|e| (step + 1, e))?;
                finite(loss, step + 1, "minibatch loss")?;
                let out = optimizer.step(&theta, &grad, eta_t).map_err(|e| (step + 1, e))?;
                let record = monitor
                    .observe(&optimizer, &theta, &out, eta_t)
                    .map_err(|e| (step + 1, e))?;
                stability.push(&record);
                if matches!(o.kind, OptimizerKind::Adam | OptimizerKind::Amsgrad) {
                    sqrt_v_bar.push(optimizer.state().v_hat.mean().sqrt());
                }
                theta = out.theta_next;
                step += 1;

                let last_in_epoch = k + 1 == batches.len();
                if last_in_epoch {
                    if let Some(t) = problem.test_loss(&theta).map_err(|e| (step, e))? {
                        let t = finite(t, step, "test loss")?;
                        best_test = Some(best_test.map_or(t, |b| b.min(t)));
                        last_test = Some(t);
                    }
                }
                let is_final = epoch + 1 == config.epochs && last_in_epoch;
                if step % config.log_every == 0 || is_final {
                    let train_loss = problem.train_loss(&theta).map_err(|e| (step, e))?;
                    let train_loss = finite(train_loss, step, "train loss")?;
                    let (r_mean, r_std) = record.rate_moments().unzip();
                    rows.push(LogRow {
                        step,
                        epoch,
                        eta_t,
                        train_loss,
                        test_loss: last_test,
                        theta_norm: theta.l2_norm(),
                        grad_norm: grad.l2_norm(),
                        r_mean,
                        r_std,
                        coeff_sq_norm: record.coeff_sq_norm,
                        rho: record.rho,
                    });
                }
            }
        }
        Ok(())
    };
    let abort = body().err();

    let report = stability.report();
    let (status, error, final_train, final_test) = match &abort {
        None => (
            "ok",
            None,
            rows.last().map(|r| r.train_loss),
            last_test,
        ),
        Some((s, e)) => ("aborted", Some(format!("step {s}: {e}")), None, None),
    };
    let hp = &o.hyper;
    let summary = RunSummary {
        status: status.into(),
        error,
        problem: problem.name().into(),
        optimizer: o.kind,
        mode: o.mode,
        lambda: hp.lambda,
        eta: hp.eta,
        lambda_equiv: lambda_equiv(o.kind, o.mode, hp, sqrt_v_bar.summary().map(|s| s.mean)),
        steps: step,
        final_train_loss: final_train,
        final_test_loss: final_test,
        best_test_loss: best_test,
        rho: monitor.rho(),
        stable: abort.is_none() && report.stable,
        coeff_sq_norm: report.coeff_sq_norm.map(Into::into),
        r_mean: report.r_mean.map(Into::into),
    };
    Ok(RunOutcome {
        rows,
        summary,
        theta,
        abort,
    })
}

/// Runs `config` and writes `log.csv`, `config.echo.json` and `summary.json`
/// into `out`. Files are written even when the run aborts.
pub fn run_to_dir(config: &RunConfig, out: &Path) -> Result<RunSummary, RunError> {
    let outcome = run(config)?;
    write_outputs(config, &outcome, out)?;
    match outcome.abort {
        Some((step, source)) => Err(RunError::Numerical { step, source }),
        None => Ok(outcome.summary),
    }
}

pub(super) fn write_outputs(config: &RunConfig, outcome: &RunOutcome, out: &Path) -> Result<(), RunError> {
    fs::create_dir_all(out)?;
    fs::write(out.join("log.csv"), outcome.log_csv()?)?;
    let mut echo = serde_json::to_vec_pretty(config)?;
    echo.push(b'\n');
    fs::write(out.join("config.echo.json"), echo)?;
    let mut f = fs::File::create(out.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, &outcome.summary)?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{OptimizerSpec, ProblemSpec};
    use crate::problems::{DatasetSpec, QuadraticProblem};
    use crate::schedule::ScheduleKind;

    fn logistic_config(mode: DecayMode, kind: OptimizerKind) -> RunConfig {
        RunConfig {
            problem: ProblemSpec::Logistic {
                dataset: DatasetSpec::LinearTeacher {
                    n: 300,
                    dim: 5,
                    label_noise: 0.05,
                    seed: 3,
                },
                intercept: false,
                standardize: true,
            },
            optimizer: OptimizerSpec {
                kind,
                mode,
                hyper: HyperParams::default().with_eta(0.01),
            },
            schedule: ScheduleKind::Constant,
            epochs: 4,
            batch_size: 64,
            log_every: 3,
            seed: 9,
            out: None,
        }
    }

    #[test]
    fn one_row_per_log_interval_plus_final() {
        let outcome = run(&logistic_config(DecayMode::Stable, OptimizerKind::Adam)).unwrap();
        // 240 training samples, batch 64 → 4 steps/epoch, 16 steps total.
        let steps: Vec<u64> = outcome.rows.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![3, 6, 9, 12, 15, 16]);
        assert_eq!(outcome.summary.steps, 16);
        assert!(outcome.summary.stable);
        // Test loss appears once the first epoch has ended.
        assert_eq!(outcome.rows[0].test_loss, None);
        assert!(outcome.rows[1..].iter().all(|r| r.test_loss.is_some()));
    }

    #[test]
    fn deterministic_bytes() {
        let c = logistic_config(DecayMode::Decoupled, OptimizerKind::Adam);
        let a = run(&c).unwrap().log_csv().unwrap();
        let b = run(&c).unwrap().log_csv().unwrap();
        assert_eq!(a, b);
        let header = String::from_utf8(a).unwrap();
        assert!(header.starts_with(&LOG_COLUMNS.join(",")));
    }

    #[test]
    fn quadratic_converges_to_ridge_solution() {
        let config = RunConfig {
            problem: ProblemSpec::Quadratic { dim: 10, seed: 4 },
            optimizer: OptimizerSpec {
                kind: OptimizerKind::Sgd,
                mode: DecayMode::Plain,
                hyper: HyperParams::default().with_eta(0.05).with_lambda(0.1).with_beta1(0.0),
            },
            schedule: ScheduleKind::Constant,
            epochs: 10_000,
            batch_size: 1,
            log_every: 1000,
            seed: 1,
            out: None,
        };
        let outcome = run(&config).unwrap();
        let star = QuadraticProblem::random(10, 4).unwrap().ridge_solution(0.1).unwrap();
        let gap = outcome
            .theta
            .iter()
            .zip(star.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap <= 1e-6, "{gap}");
    }

    #[test]
    fn overshoot_aborts_with_step() {
        let mut c = logistic_config(DecayMode::Decoupled, OptimizerKind::Sgd);
        c.optimizer.hyper = HyperParams::default().with_eta(1.0).with_lambda(2.0);
        let outcome = run(&c).unwrap();
        let (step, err) = outcome.abort.unwrap();
        assert_eq!(step, 1);
        assert!(matches!(err, Error::DecayOvershoot { .. }));
        assert_eq!(outcome.summary.status, "aborted");
    }

    #[test]
    fn lambda_equiv_per_mode() {
        let hp = HyperParams::default().with_lambda(0.005);
        assert_eq!(lambda_equiv(OptimizerKind::Sgd, DecayMode::Decoupled, &hp, None), Some(0.005 * 0.09999999999999998));
        assert_eq!(lambda_equiv(OptimizerKind::Adam, DecayMode::Decoupled, &hp, Some(0.1)), Some(0.0005));
        assert_eq!(lambda_equiv(OptimizerKind::Adam, DecayMode::Stable, &hp, Some(0.1)), Some(0.005));
        assert_eq!(lambda_equiv(OptimizerKind::Adam, DecayMode::L2, &hp, Some(0.1)), None);
    }
}
