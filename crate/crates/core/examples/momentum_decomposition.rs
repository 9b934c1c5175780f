//! How L2 regularization leaks through the momentum buffer.
//!
//! With `g' = g + λθ` the buffer holds `β3·Σβ1^{t−k}g_k` plus
//! `λβ3·Σβ1^{t−k}θ_{k−1}`: the decay is applied to a moving average of past
//! iterates, scaled up by up to `β3/(1−β1)`.

use swd::diagnostics::{momentum_l2_decomposition, MomentumTrace};
use swd::problems::{logistic_problem, make_linear_teacher};
use swd::{HyperParams, Problem, RandomSource};

pub struct DecompositionReport {
    pub max_error: f64,
    /// `‖decay part‖ / (λ‖θ_{t−1}‖)` at a few steps.
    pub amplification: Vec<(usize, f64)>,
}

pub fn run_example() -> swd::Result<DecompositionReport> {
    let problem = logistic_problem(make_linear_teacher(300, 6, 0.1, 8)?.standardized())?;
    let hp = HyperParams::default().with_eta(0.05).with_lambda(0.01).with_beta1(0.9);
    let theta0 = RandomSource::new(3).normal_vector(problem.dim(), 1.0);
    let trace = MomentumTrace::record(&problem, &hp, &theta0, 500)?;
    let steps = momentum_l2_decomposition(&trace);

    let amplification = [1, 2, 5, 10, 50, 500]
        .iter()
        .map(|&t| {
            let decay = steps[t - 1].decay_part.iter().map(|d| d * d).sum::<f64>().sqrt();
            (t, decay / (hp.lambda * trace.thetas[t - 1].l2_norm()))
        })
        .collect();
    let max_error = steps.iter().map(|s| s.reconstruction_error).fold(0.0, f64::max);
    Ok(DecompositionReport { max_error, amplification })
}

fn main() -> swd::Result<()> {
    let r = run_example()?;
    for (t, a) in &r.amplification {
        println!("t = {t:>3}  decay part / (λ‖θ‖) = {a:.4}");
    }
    println!("max reconstruction error over 500 steps: {:.2e}", r.max_error);
    Ok(())
}
