//! Adai and AMSGrad on a small MLP.

use swd::problems::{make_two_moons, mlp_problem, Activation, EpochSampler};
use swd::{make_optimizer, DecayMode, HyperParams, OptimizerKind, Problem, RandomSource};

pub fn run_example() -> swd::Result<Vec<(OptimizerKind, DecayMode, f64, f64)>> {
    let data = make_two_moons(600, 0.1, 2)?.standardized();
    let problem = mlp_problem(data, &[2, 16, 2], Activation::Tanh)?;
    let runs = [
        (OptimizerKind::Adai, DecayMode::Stable, HyperParams::default().with_eta(0.1).with_lambda(5e-4)),
        (OptimizerKind::Adai, DecayMode::L2, HyperParams::default().with_eta(0.1).with_lambda(5e-4)),
        (OptimizerKind::Amsgrad, DecayMode::Stable, HyperParams::default().with_eta(0.01).with_lambda(5e-4)),
        (OptimizerKind::Amsgrad, DecayMode::Decoupled, HyperParams::default().with_eta(0.01).with_lambda(0.5)),
    ];

    let mut out = Vec::new();
    for (kind, mode, hp) in runs {
        let mut rng = RandomSource::new(7);
        let mut theta = problem.initial_point(&mut rng);
        let start = problem.train_loss(&theta)?;
        let mut opt = make_optimizer(kind, problem.dim(), hp, mode)?;
        let sampler = EpochSampler::new(problem.train_size(), 32);
        for _ in 0..20 {
            for batch in sampler.epoch(&mut rng) {
                let (_, g) = problem.loss_grad(&theta, &batch)?;
                theta = opt.step(&theta, &g, hp.eta)?.theta_next;
            }
        }
        out.push((kind, mode, start, problem.train_loss(&theta)?));
    }
    Ok(out)
}

fn main() -> swd::Result<()> {
    for (kind, mode, start, end) in run_example()? {
        println!("{kind:>8}/{mode:<10} loss {start:.4} -> {end:.4}");
    }
    Ok(())
}
