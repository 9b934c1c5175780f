use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swd::harness::{run_to_dir, sweep_to_dir, verify, Grid, RunConfig, RunError, Suite, VerifyOptions};
use swd::problems::DatasetSpec;
use swd::SwdFactor;

#[derive(Parser)]
#[command(name = "swd", version, about = "Weight decay experiments: runs, sweeps and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train once and write log.csv, config.echo.json and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `out` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a lambda x eta x mode grid around a base config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a verification suite and print a JSON report.
    Verify {
        /// propositions, equivalences, gradients or all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the stable-decay SGD factor (mutation testing).
        #[arg(long)]
        swd_factor: Option<f64>,
    },
    /// Export a synthetic dataset as CSV.
    GenData {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out
                .or_else(|| cfg.out.clone())
                .ok_or_else(|| RunError::Config("no output directory: pass --out".into()))?;
            let summary = run_to_dir(&cfg, &out)?;
            eprintln!(
                "{} steps, final train loss {}, stable: {}",
                summary.steps,
                summary.final_train_loss.map_or("-".into(), |l| l.to_string()),
                summary.stable
            );
        }
        Command::Sweep { config, grid, out, threads } => {
            let cfg = RunConfig::load(&config)?;
            let grid = Grid::load(&grid)?;
            let rows = sweep_to_dir(&cfg, &grid, threads, &out)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            eprintln!("{} cells, {failed} flagged", rows.len());
        }
        Command::Verify { suite, out, swd_factor } => {
            let suite: Suite = suite.parse()?;
            let options = VerifyOptions {
                swd_factor: swd_factor.map(SwdFactor::Fixed),
            };
            let report = verify(suite, &options);
            let json = serde_json::to_string_pretty(&report).map_err(RunError::from)?;
            println!("{json}");
            if let Some(path) = out {
                fs::write(path, format!("{json}\n"))?;
            }
            if !report.passed {
                let names: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
                return Err(RunError::Verify(names.join("; ")));
            }
        }
        Command::GenData { name, seed, n, out } => {
            let spec = DatasetSpec::named(&name, seed, n).map_err(|e| RunError::Config(e.to_string()))?;
            let data = spec.generate().map_err(|e| RunError::Config(e.to_string()))?;
            if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            data.write_csv(fs::File::create(&out)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
