//! A λ × mode sweep of the Adam family on a two-moons MLP.
//!
//! Writes one run directory per cell plus `summary.csv` and `grid.csv`.

use std::path::PathBuf;

use swd::harness::{sweep_to_dir, Grid, RunConfig, SweepRow};

const BASE: &str = r#"
epochs = 10
batch_size = 128
log_every = 20
seed = 0

[problem]
kind = "mlp"
layers = [2, 16, 2]

[problem.dataset]
generator = "two_moons"
n = 1000
noise = 0.15
seed = 1

[optimizer]
kind = "adam"
mode = "stable"

[optimizer.hyper]
eta = 0.001
"#;

pub fn run_example(out: PathBuf) -> Result<Vec<SweepRow>, swd::harness::RunError> {
    let base = RunConfig::from_toml(BASE)?;
    let grid = Grid::from_toml(
        "lambda = [5e-5, 5e-4, 5e-3]\neta = [0.001]\nmode = [\"l2\", \"decoupled\", \"stable\"]",
    )?;
    sweep_to_dir(&base, &grid, None, &out)
}

fn main() -> Result<(), swd::harness::RunError> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("swd_two_moons_sweep"));
    let rows = run_example(out.clone())?;
    println!("{:<10} {:>8} {:>12} {:>12} {:>7}", "mode", "lambda", "best test", "lambda_equiv", "stable");
    for r in &rows {
        println!(
            "{:<10} {:>8} {:>12.5} {:>12} {:>7}",
            r.mode.as_str(),
            r.lambda,
            r.best_test_loss.unwrap_or(f64::NAN),
            r.lambda_equiv.map_or("-".into(), |l| format!("{l:.3e}")),
            r.stable
        );
    }
    println!("written to {}", out.display());
    Ok(())
}
