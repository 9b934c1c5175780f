//! A single config-driven run, equivalent to `swd run --config ... --out ...`.

use swd::harness::{run, RunConfig, RunOutcome};

const CONFIG: &str = r#"
epochs = 30
batch_size = 64
log_every = 50

[problem]
kind = "logistic"
intercept = true

[problem.dataset]
generator = "linear_teacher"
n = 1000
dim = 10
label_noise = 0.05
seed = 7

[optimizer]
kind = "sgd"
mode = "stable"

[optimizer.hyper]
eta = 0.1
lambda = 0.0005
beta1 = 0.9

[schedule]
kind = "cosine_restarts"
t0 = 10
t_mult = 2
"#;

pub fn run_example() -> Result<RunOutcome, swd::harness::RunError> {
    run(&RunConfig::from_toml(CONFIG)?)
}

fn main() -> Result<(), swd::harness::RunError> {
    let outcome = run_example()?;
    print!("{}", String::from_utf8_lossy(&outcome.log_csv()?));
    println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
    Ok(())
}
