//! Weight decay as a rescaling of the coordinates.
//!
//! Plain-decay SGD on `θ` is gradient descent on `w = θ/(1−ηλ)^t` with a
//! growing step size. Both runs are carried out and compared.

use swd::diagnostics::rescaled_trajectory_check;
use swd::problems::QuadraticProblem;
use swd::{HyperParams, RandomSource};

pub fn run_example() -> swd::Result<Vec<(f64, f64)>> {
    let problem = QuadraticProblem::random(10, 2)?;
    let theta0 = RandomSource::new(2).normal_vector(10, 1.0);
    let mut out = Vec::new();
    for lambda in [0.0, 0.01, 0.1, 0.5] {
        let hp = HyperParams::default().with_eta(0.1).with_lambda(lambda);
        out.push((lambda, rescaled_trajectory_check(&problem, &hp, &theta0, 200)?));
    }
    Ok(out)
}

fn main() -> swd::Result<()> {
    for (lambda, dev) in run_example()? {
        println!("λ = {lambda:<5} max |θ_t − (1−ηλ)^t w_t| / |θ_t| = {dev:.3e}");
    }
    Ok(())
}
