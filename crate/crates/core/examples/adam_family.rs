//! AdamW vs AdamS: the squared norm of the weight decay coefficient.
//!
//! For AdamW it is `Σv̂`, which drifts with the gradient statistics. For
//! AdamS it is the dimension at every step.

use swd::diagnostics::{DecayMonitor, StabilityTracker};
use swd::problems::{logistic_problem, make_linear_teacher};
use swd::{make_optimizer, DecayMode, HyperParams, MinibatchView, OptimizerKind, Problem, RandomSource};

pub struct NormSeries {
    pub mode: DecayMode,
    pub first: f64,
    pub last: f64,
    pub relative_std: f64,
    pub stable: bool,
}

pub fn run_example() -> swd::Result<Vec<NormSeries>> {
    let dim = 25;
    let problem = logistic_problem(make_linear_teacher(400, dim, 0.1, 3)?.standardized())?;
    let batch = MinibatchView::full(problem.train_size());
    let hp = HyperParams::default().with_eta(0.01).with_lambda(0.0005);

    let mut out = Vec::new();
    for mode in [DecayMode::Decoupled, DecayMode::Stable] {
        let mut opt = make_optimizer(OptimizerKind::Adam, dim, hp, mode)?;
        let mut monitor = DecayMonitor::new(&opt);
        let mut tracker = StabilityTracker::default();
        let mut theta = RandomSource::new(5).normal_vector(dim, 0.5);
        let mut norms = Vec::new();
        for _ in 0..500 {
            let (_, g) = problem.loss_grad(&theta, &batch)?;
            let step = opt.step(&theta, &g, hp.eta)?;
            let record = monitor.observe(&opt, &theta, &step, hp.eta)?;
            norms.push(record.coeff_sq_norm.unwrap());
            tracker.push(&record);
            theta = step.theta_next;
        }
        let report = tracker.report();
        let stats = report.coeff_sq_norm.unwrap();
        out.push(NormSeries {
            mode,
            first: norms[0],
            last: *norms.last().unwrap(),
            relative_std: stats.relative_std(),
            stable: report.stable,
        });
    }
    Ok(out)
}

fn main() -> swd::Result<()> {
    for s in run_example()? {
        println!(
            "adam/{:<9}  Σc² first {:>10.4e}  last {:>10.4e}  rel std {:.2e}  stable {}",
            s.mode.as_str(),
            s.first,
            s.last,
            s.relative_std,
            s.stable
        );
    }
    Ok(())
}
