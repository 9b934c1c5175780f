//! Central finite differences against every hand-written gradient.

use swd::problems::{
    gradient_check, make_blobs, make_linear_teacher, make_two_moons, mlp_problem, Activation,
    LogisticProblem, QuadraticProblem,
};
use swd::{MinibatchView, Problem, RandomSource};

fn worst(problem: &dyn Problem, batch: &MinibatchView, seed: u64) -> swd::Result<f64> {
    let mut rng = RandomSource::new(seed);
    let mut worst: f64 = 0.0;
    let mut probes = 0;
    while probes < 10 {
        let start = problem.initial_point(&mut rng);
        let noise = rng.normal_vector(problem.dim(), 0.1);
        let theta = start.iter().zip(noise.iter()).map(|(a, b)| a + b).collect::<Vec<_>>();
        let theta = swd::ParamVector::new(theta)?;
        if problem.kink_margin(&theta, batch).is_some_and(|m| m < 1e-4) {
            continue;
        }
        worst = worst.max(gradient_check(problem, &theta, batch, 1e-6)?.rel_error);
        probes += 1;
    }
    Ok(worst)
}

pub fn run_example() -> swd::Result<Vec<(String, f64)>> {
    let batch = MinibatchView::new((0..32).collect());
    let blobs = make_blobs(300, &[vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 3.0]], 0.8, 4)?;
    let problems: Vec<(&str, Box<dyn Problem>, MinibatchView)> = vec![
        ("quadratic d=10", Box::new(QuadraticProblem::random(10, 3)?), MinibatchView::full(1)),
        (
            "logistic d=20 + bias",
            Box::new(LogisticProblem::new(make_linear_teacher(200, 20, 0.1, 7)?.standardized(), true)?),
            batch.clone(),
        ),
        (
            "mlp 2-8-2 tanh",
            Box::new(mlp_problem(make_two_moons(200, 0.1, 5)?.standardized(), &[2, 8, 2], Activation::Tanh)?),
            batch.clone(),
        ),
        (
            "mlp 2-12-3 relu",
            Box::new(mlp_problem(blobs.standardized(), &[2, 12, 3], Activation::Relu)?),
            batch,
        ),
    ];
    problems
        .iter()
        .enumerate()
        .map(|(i, (name, p, b))| Ok((name.to_string(), worst(p.as_ref(), b, i as u64)?)))
        .collect()
}

fn main() -> swd::Result<()> {
    for (name, err) in run_example()? {
        println!("{name:<22} worst relative error over 10 probes: {err:.2e}");
    }
    Ok(())
}
