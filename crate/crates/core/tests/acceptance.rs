//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use swd::diagnostics::{
    full_batch_trajectory, max_relative_gap, momentum_l2_decomposition, rescaled_trajectory_check,
    weight_decay_rate, DecayMonitor, MomentumTrace,
};
use swd::harness::{sweep_to_dir, Grid, RunConfig};
use swd::problems::{
    gradient_check, logistic_problem, make_linear_teacher, make_two_moons, mlp_problem, Activation,
    LogisticProblem, QuadraticProblem,
};
use swd::schedule::restart_boundaries;
use swd::{
    make_optimizer, DecayMode, HyperParams, MinibatchView, OptimizerKind, ParamVector, Problem,
    RandomSource, Result, ScheduleKind, ScheduleSpec,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn at_most(what: &str, measured: f64, tol: f64) -> Outcome {
    outcome(measured <= tol, format!("{what} = {measured:.3e} (<= {tol:e})"))
}

fn within(limit: Duration, started: Instant, mut o: Outcome) -> Outcome {
    let took = started.elapsed();
    o.passed &= took < limit;
    o.detail = format!("{}; {:.2}s (< {}s)", o.detail, took.as_secs_f64(), limit.as_secs());
    o
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn logistic(dim: usize, seed: u64) -> Result<LogisticProblem> {
    logistic_problem(make_linear_teacher(300, dim, 0.1, seed)?.standardized())
}

fn rel_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt() / mean.abs()
}

fn coeff_norms(p: &dyn Problem, mode: DecayMode, steps: usize) -> Result<Vec<f64>> {
    let hp = HyperParams::default().with_lambda(5e-4);
    let mut opt = make_optimizer(OptimizerKind::Adam, p.dim(), hp, mode)?;
    let mut theta = RandomSource::new(3).normal_vector(p.dim(), 0.5);
    let batch = MinibatchView::full(p.train_size());
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (_, g) = p.loss_grad(&theta, &batch)?;
        let step = opt.step(&theta, &g, hp.eta)?;
        let rate = weight_decay_rate(OptimizerKind::Adam, mode, opt.state(), &hp, hp.eta, None)?
            .expect("adaptive decoupled rates are defined");
        out.push(rate.coeff_sq_norm());
        theta = step.theta_next;
    }
    Ok(out)
}

fn adams_coefficient_norm() -> Result<Outcome> {
    let started = Instant::now();
    let (mut err, mut std_s, mut std_w) = (0.0f64, 0.0f64, f64::INFINITY);
    for dim in [1, 10, 1000] {
        let p = logistic(dim, 100 + dim as u64)?;
        let stable = coeff_norms(&p, DecayMode::Stable, 2000)?;
        let d = dim as f64;
        err = err.max(stable.iter().map(|c| (c - d).abs() / d).fold(0.0, f64::max));
        std_s = std_s.max(rel_std(&stable));
        std_w = std_w.min(rel_std(&coeff_norms(&p, DecayMode::Decoupled, 2000)?));
    }
    let o = outcome(
        err <= 1e-9 && std_s <= 1e-12 && std_w > 1e-3,
        format!(
            "AdamS |sum c^2 - dim|/dim = {err:.3e} (<= 1e-9), rel std = {std_s:.3e} (<= 1e-12); \
             AdamW min rel std = {std_w:.3e} (> 1e-3)"
        ),
    );
    Ok(within(Duration::from_secs(30), started, o))
}

fn zero_gradient_isotropy() -> Result<Outcome> {
    let hp = HyperParams::default().with_eta(0.001).with_lambda(0.5);
    let theta0 = ParamVector::new(vec![2.0, -0.5, 1e-3, 40.0, -7.25])?;
    let mut opt = make_optimizer(OptimizerKind::Adam, theta0.dim(), hp, DecayMode::Decoupled)?;
    let mut monitor = DecayMonitor::new(&opt);
    let zero = ParamVector::zeros(theta0.dim());
    let mut theta = theta0.clone();
    let mut worst = 0.0f64;
    for t in 1..=1000 {
        let out = opt.step(&theta, &zero, hp.eta)?;
        monitor.observe(&opt, &theta, &out, hp.eta)?;
        theta = out.theta_next;
        let expected = (1.0 - 0.001 * 0.5f64).powi(t);
        for (x, x0) in theta.iter().zip(theta0.iter()) {
            worst = worst.max((x / x0 - expected).abs() / expected);
        }
    }
    Ok(at_most("max |theta_t/theta_0 - (1-eta*lambda)^t| rel", worst, 1e-12))
}

fn vanilla_equals_plain() -> Result<Outcome> {
    let q = QuadraticProblem::random(10, 11)?;
    let theta0 = RandomSource::new(11).normal_vector(10, 1.0);
    let hp = HyperParams::default().with_beta1(0.0).with_eta(0.05).with_lambda(0.2);
    let plain = full_batch_trajectory(&q, OptimizerKind::Sgd, DecayMode::Plain, &hp, &theta0, 1000)?;
    let vanilla_hp = hp.with_lambda(hp.eta * hp.lambda);
    let vanilla = full_batch_trajectory(&q, OptimizerKind::Sgd, DecayMode::Vanilla, &vanilla_hp, &theta0, 1000)?;
    Ok(at_most("max trajectory gap", max_relative_gap(&vanilla, &plain), 1e-12))
}

fn rescaled_coordinates() -> Result<Outcome> {
    let q = QuadraticProblem::random(10, 12)?;
    let theta0 = RandomSource::new(12).normal_vector(10, 1.0);
    let hp = HyperParams::default().with_eta(0.1).with_lambda(0.1);
    Ok(at_most("max deviation", rescaled_trajectory_check(&q, &hp, &theta0, 200)?, 1e-8))
}

/// Gauss-Jordan with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

fn ridge_oracle() -> Result<Outcome> {
    let started = Instant::now();
    let (eta, lambda) = (0.05, 0.1);
    let q = QuadraticProblem::random(10, 13)?;
    let mut shifted = q.a().to_vec();
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] += lambda;
    }
    let star = solve(shifted, q.b().to_vec());
    let hp = HyperParams::default().with_beta1(0.0).with_eta(eta).with_lambda(lambda);
    let mut opt = make_optimizer(OptimizerKind::Sgd, 10, hp, DecayMode::Plain)?;
    let batch = MinibatchView::full(1);
    let mut theta = RandomSource::new(13).normal_vector(10, 1.0);
    let dist = |t: &ParamVector| t.iter().zip(&star).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let mut steps = 0;
    while steps < 10_000 && dist(&theta) > 1e-6 {
        let (_, g) = q.loss_grad(&theta, &batch)?;
        theta = opt.step(&theta, &g, eta)?.theta_next;
        steps += 1;
    }
    let o = at_most(&format!("max |theta - theta*| after {steps} steps"), dist(&theta), 1e-6);
    Ok(within(Duration::from_secs(5), started, o))
}

fn sgds_retuning() -> Result<Outcome> {
    let p = logistic(8, 14)?;
    let theta0 = RandomSource::new(14).normal_vector(8, 1.0);
    let (beta1, beta3, lambda_s) = (0.9, 1.0, 0.01);
    let hp = HyperParams::default()
        .with_eta(0.05)
        .with_beta1(beta1)
        .with_beta3(beta3)
        .with_lambda(lambda_s);
    let lambda_w = beta3 / (1.0 - beta1) * lambda_s;
    let traj = |mode, hp: &HyperParams| full_batch_trajectory(&p, OptimizerKind::Sgd, mode, hp, &theta0, 100);
    let stable = traj(DecayMode::Stable, &hp)?;
    let decoupled = traj(DecayMode::Decoupled, &hp.with_lambda(lambda_w))?;
    let l2 = traj(DecayMode::L2, &hp)?;
    let same = max_relative_gap(&stable, &decoupled);
    let apart = max_relative_gap(&l2, &stable).min(max_relative_gap(&l2, &decoupled));
    Ok(outcome(
        same <= 1e-15 && apart > 1e-6,
        format!("SGDS vs SGDW gap = {same:.3e} (<= 1e-15); L2 gap = {apart:.3e} (> 1e-6)"),
    ))
}

fn momentum_decomposition() -> Result<Outcome> {
    let p = logistic(8, 15)?;
    let hp = HyperParams::default().with_eta(0.1).with_lambda(0.01);
    let theta0 = RandomSource::new(15).normal_vector(8, 1.0);
    let trace = MomentumTrace::record(&p, &hp, &theta0, 500)?;
    let worst = momentum_l2_decomposition(&trace)
        .iter()
        .map(|d| d.reconstruction_error)
        .fold(0.0, f64::max);
    Ok(at_most("max reconstruction error", worst, 1e-10))
}

fn probes(p: &dyn Problem, batch: &MinibatchView, seed: u64) -> Result<f64> {
    let mut rng = RandomSource::new(seed);
    let (mut worst, mut done) = (0.0f64, 0);
    while done < 10 {
        let theta = p.initial_point(&mut rng);
        if p.kink_margin(&theta, batch).is_some_and(|m| m < 1e-4) {
            continue;
        }
        worst = worst.max(gradient_check(p, &theta, batch, 1e-6)?.rel_error);
        done += 1;
    }
    Ok(worst)
}

fn gradient_checks() -> Result<Outcome> {
    let started = Instant::now();
    let batch = MinibatchView::new((0..40).collect());
    let moons = make_two_moons(200, 0.1, 16)?.standardized();
    let problems: Vec<(&str, Box<dyn Problem>)> = vec![
        ("quadratic", Box::new(QuadraticProblem::random(10, 16)?)),
        ("logistic", Box::new(LogisticProblem::new(make_linear_teacher(200, 12, 0.1, 16)?.standardized(), true)?)),
        ("mlp 2-8-2", Box::new(mlp_problem(moons.clone(), &[2, 8, 2], Activation::Tanh)?)),
        ("mlp 2-16-16-2 relu", Box::new(mlp_problem(moons, &[2, 16, 16, 2], Activation::Relu)?)),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (i, (name, p)) in problems.iter().enumerate() {
        let b = if *name == "quadratic" { MinibatchView::full(1) } else { batch.clone() };
        let e = probes(p.as_ref(), &b, 60 + i as u64)?;
        parts.push(format!("{name} {e:.1e}"));
        worst = worst.max(e);
    }
    let o = at_most(&format!("worst rel error [{}]", parts.join(", ")), worst, 1e-5);
    Ok(within(Duration::from_secs(10), started, o))
}

fn tf_equals_hbm() -> Result<Outcome> {
    let q = QuadraticProblem::random(10, 17)?;
    let theta0 = RandomSource::new(17).normal_vector(10, 1.0);
    let hp = HyperParams::default().with_eta(0.02).with_lambda(0.0);
    let hbm = full_batch_trajectory(&q, OptimizerKind::Sgd, DecayMode::None, &hp, &theta0, 1000)?;
    let tf = full_batch_trajectory(&q, OptimizerKind::TfSgd, DecayMode::None, &hp, &theta0, 1000)?;
    Ok(at_most("max trajectory gap", max_relative_gap(&tf, &hbm), 1e-12))
}

fn schedule_facts() -> Result<Outcome> {
    let boundaries = restart_boundaries(14, 2, 210);
    let spec = ScheduleSpec::new(
        ScheduleKind::Milestones {
            milestones: vec![80, 160],
            decay_factor: 0.1,
        },
        0.1,
        1,
    )?;
    let segments = [spec.lr_at(0, 0), spec.lr_at(79, 0), spec.lr_at(80, 0), spec.lr_at(159, 0), spec.lr_at(160, 0), spec.lr_at(199, 0)];
    let expected = [0.1, 0.1, 0.01, 0.01, 0.001, 0.001];
    let lr_err = segments.iter().zip(expected).fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / b));
    Ok(outcome(
        boundaries == [14, 42, 98, 210] && lr_err <= 1e-12,
        format!("boundaries = {boundaries:?}; milestone rates = {segments:?}"),
    ))
}

fn swd(args: &[&str]) -> Result<bool> {
    Ok(Command::new(env!("CARGO_BIN_EXE_swd"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false))
}

fn determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir().map_err(|e| swd::Error::InvalidArgument(e.to_string()))?;
    let config = root().join("configs/two_moons_adams.toml");
    let grid = root().join("configs/adam_modes_grid.toml");
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let mut ok = swd(&["run", "--config", &s(&config), "--out", &s(&a)])?;
    ok &= swd(&["run", "--config", &s(&config), "--out", &s(&b)])?;
    let read = |p: PathBuf| fs::read(p).unwrap_or_default();
    let logs_equal = ok && read(a.join("log.csv")) == read(b.join("log.csv"));
    let mut summaries = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("sweep{threads}"));
        ok &= swd(&["sweep", "--config", &s(&config), "--grid", &s(&grid), "--out", &s(&out), "--threads", threads])?;
        summaries.push(read(out.join("summary.csv")));
    }
    let cells = String::from_utf8_lossy(&summaries[0]).lines().count().saturating_sub(1);
    let sweeps_equal = ok && cells == 9 && summaries[0] == summaries[1];
    Ok(outcome(
        logs_equal && sweeps_equal,
        format!("run log.csv identical: {logs_equal}; {cells}-cell sweep summary identical at 1 and 4 threads: {sweeps_equal}"),
    ))
}

fn two_moons_sweep() -> Result<Outcome> {
    let started = Instant::now();
    let load = |e: swd::harness::RunError| swd::Error::InvalidArgument(e.to_string());
    let base = RunConfig::load(&root().join("configs/two_moons_adams.toml")).map_err(load)?;
    let grid = Grid::from_toml("lambda = [5e-5, 5e-4, 5e-3]\neta = [0.001]\nmode = [\"l2\", \"decoupled\", \"stable\"]\n")
        .map_err(load)?;
    let dir = tempfile::tempdir().map_err(|e| swd::Error::InvalidArgument(e.to_string()))?;
    let rows = sweep_to_dir(&base, &grid, Some(1), dir.path()).map_err(load)?;
    let grid_written = dir.path().join("grid.csv").exists();
    let all_ok = rows.len() == 9 && rows.iter().all(|r| r.status == "ok");
    let adams: Vec<bool> = rows.iter().filter(|r| r.mode == DecayMode::Stable).map(|r| r.stable).collect();
    let adamw: Vec<bool> = rows.iter().filter(|r| r.mode == DecayMode::Decoupled).map(|r| r.stable).collect();
    let o = outcome(
        grid_written && all_ok && adams.iter().all(|&s| s) && adamw.iter().all(|&s| !s),
        format!("9 cells ok: {all_ok}; grid.csv: {grid_written}; AdamS stable {adams:?}; AdamW stable {adamw:?}"),
    );
    Ok(within(Duration::from_secs(300), started, o))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 12] = [
        ("AdamS coefficient norm equals dimension", adams_coefficient_norm),
        ("zero-gradient AdamW decays isotropically", zero_gradient_isotropy),
        ("vanilla decay at eta*lambda equals plain decay", vanilla_equals_plain),
        ("rescaled-coordinate equivalence", rescaled_coordinates),
        ("plain decay converges to the ridge solution", ridge_oracle),
        ("SGDS equals re-tuned SGDW, L2 departs", sgds_retuning),
        ("momentum buffer decomposition", momentum_decomposition),
        ("gradient checks on every problem", gradient_checks),
        ("TF-style SGD equals heavy-ball SGD", tf_equals_hbm),
        ("schedule boundaries and milestones", schedule_facts),
        ("determinism of runs and sweeps", determinism),
        ("two-moons Adam-family sweep", two_moons_sweep),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        failed += usize::from(!o.passed);
        println!("{} criterion {}: {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
