//! Learning-rate schedules and what they do to the vanilla decay rate.
//!
//! With vanilla decay (`θ ← θ − λθ − ηg`) the rate measured against the
//! learning rate is `1 − λ/η_t`, so every milestone multiplies the decay
//! coefficient by ten.

use swd::diagnostics::weight_decay_rate;
use swd::optim::OptimizerState;
use swd::schedule::restart_boundaries;
use swd::{DecayMode, HyperParams, OptimizerKind, ScheduleKind, ScheduleSpec};

pub struct ScheduleReport {
    pub milestone_etas: Vec<f64>,
    pub vanilla_rates: Vec<f64>,
    pub restarts: Vec<u64>,
    pub cosine_first_period: Vec<f64>,
}

pub fn run_example() -> swd::Result<ScheduleReport> {
    let steps = ScheduleSpec::new(
        ScheduleKind::Milestones { milestones: vec![80, 160], decay_factor: 0.1 },
        0.1,
        1,
    )?;
    let milestone_etas: Vec<f64> = [0, 80, 160].iter().map(|&e| steps.lr_at(e, 0)).collect();

    let hp = HyperParams::default().with_beta1(0.0).with_lambda(0.001);
    let state = OptimizerState::new(1);
    let mut vanilla_rates = Vec::new();
    for &eta in &milestone_etas[..2] {
        let r = weight_decay_rate(OptimizerKind::Sgd, DecayMode::Vanilla, &state, &hp, eta, None)?
            .expect("vanilla rate is defined");
        vanilla_rates.push(r.present()[0]);
    }

    let cosine = ScheduleSpec::new(
        ScheduleKind::CosineRestarts { t0: 14, t_mult: 2, eta_min: 0.0 },
        0.1,
        4,
    )?;
    let cosine_first_period = (0..14).map(|e| cosine.lr_at(e, 0)).collect();

    Ok(ScheduleReport {
        milestone_etas,
        vanilla_rates,
        restarts: restart_boundaries(14, 2, 210),
        cosine_first_period,
    })
}

fn main() -> swd::Result<()> {
    let r = run_example()?;
    println!("milestone learning rates: {:?}", r.milestone_etas);
    println!("vanilla decay rate before/after first milestone: {:?}", r.vanilla_rates);
    println!("cosine restarts over 210 epochs at: {:?}", r.restarts);
    for (epoch, eta) in r.cosine_first_period.iter().enumerate() {
        println!("epoch {epoch:>2}  eta {eta:.5}");
    }
    Ok(())
}
