//! Plain-decay SGD on a quadratic converges to the ridge solution.

use swd::diagnostics::full_batch_trajectory;
use swd::problems::QuadraticProblem;
use swd::{DecayMode, HyperParams, OptimizerKind, RandomSource};

pub fn run_example() -> swd::Result<f64> {
    let problem = QuadraticProblem::random(10, 4)?;
    let hp = HyperParams::default().with_eta(0.05).with_lambda(0.1).with_beta1(0.0);
    let theta0 = RandomSource::new(0).normal_vector(10, 1.0);
    let traj = full_batch_trajectory(&problem, OptimizerKind::Sgd, DecayMode::Plain, &hp, &theta0, 10_000)?;
    let star = problem.ridge_solution(hp.lambda)?;
    let gap = traj
        .last()
        .unwrap()
        .iter()
        .zip(star.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(gap)
}

fn main() -> swd::Result<()> {
    println!("max |θ_10000 − (A+λI)⁻¹b| = {:.3e}", run_example()?);
    Ok(())
}
