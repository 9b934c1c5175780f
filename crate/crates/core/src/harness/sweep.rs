use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{run, write_outputs};
use super::{num, RunConfig, RunError};
use crate::numerics::RandomSource;
use crate::optim::DecayMode;

/// λ × η × mode grid. Cells are enumerated mode-major, then λ, then η.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lambda: Vec<f64>,
    pub eta: Vec<f64>,
    pub mode: Vec<DecayMode>,
}

impl Grid {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let grid: Self = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        if grid.lambda.is_empty() || grid.eta.is_empty() || grid.mode.is_empty() {
            return Err(RunError::Config("every grid axis needs at least one value".into()));
        }
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn cells(&self) -> Vec<(DecayMode, f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for &mode in &self.mode {
            for &lambda in &self.lambda {
                for &eta in &self.eta {
                    out.push((mode, lambda, eta));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.mode.len() * self.lambda.len() * self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Column order of the sweep's `summary.csv`.
pub const SUMMARY_COLUMNS: [&str; 12] = [
    "cell",
    "mode",
    "lambda",
    "eta",
    "lambda_equiv",
    "status",
    "final_train_loss",
    "best_test_loss",
    "rho",
    "stable",
    "steps",
    "error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: usize,
    pub mode: DecayMode,
    pub lambda: f64,
    pub eta: f64,
    pub lambda_equiv: Option<f64>,
    /// `ok`, `aborted` (numerical failure) or `invalid` (config rejected).
    pub status: String,
    pub final_train_loss: Option<f64>,
    pub best_test_loss: Option<f64>,
    pub rho: Option<f64>,
    pub stable: bool,
    pub steps: u64,
    pub error: Option<String>,
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl SweepRow {
    fn fields(&self) -> [String; 12] {
        [
            self.cell.to_string(),
            self.mode.to_string(),
            num(self.lambda),
            num(self.eta),
            opt(self.lambda_equiv),
            self.status.clone(),
            opt(self.final_train_loss),
            opt(self.best_test_loss),
            opt(self.rho),
            self.stable.to_string(),
            self.steps.to_string(),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

fn cell_config(base: &RunConfig, index: usize, mode: DecayMode, lambda: f64, eta: f64) -> RunConfig {
    let mut c = base.clone();
    c.optimizer.mode = mode;
    c.optimizer.hyper.lambda = lambda;
    c.optimizer.hyper.eta = eta;
    c.seed = RandomSource::derive_seed(base.seed, index as u64);
    c.out = None;
    c
}

fn cell_dir(index: usize, mode: DecayMode, lambda: f64, eta: f64) -> String {
    format!("cell_{index:03}_{mode}_lambda{lambda}_eta{eta}")
}

fn run_cell(base: &RunConfig, index: usize, mode: DecayMode, lambda: f64, eta: f64, out: Option<&Path>) -> SweepRow {
    let config = cell_config(base, index, mode, lambda, eta);
    let mut row = SweepRow {
        cell: index,
        mode,
        lambda,
        eta,
        lambda_equiv: None,
        status: "invalid".into(),
        final_train_loss: None,
        best_test_loss: None,
        rho: None,
        stable: false,
        steps: 0,
        error: None,
    };
    let outcome = match run(&config) {
        Ok(o) => o,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    if let Some(dir) = out {
        if let Err(e) = write_outputs(&config, &outcome, &dir.join(cell_dir(index, mode, lambda, eta))) {
            row.status = "io_error".into();
            row.error = Some(e.to_string());
            return row;
        }
    }
    let s = outcome.summary;
    row.lambda_equiv = s.lambda_equiv;
    row.status = s.status;
    row.final_train_loss = s.final_train_loss;
    row.best_test_loss = s.best_test_loss;
    row.rho = s.rho;
    row.stable = s.stable;
    row.steps = s.steps;
    row.error = s.error;
    row
}

/// Runs every grid cell on a pool of `threads` workers (`None`: all cores).
///
/// Each cell gets seed `derive_seed(base.seed, cell)`, so results do not
/// depend on the number of workers. Rows come back in cell order.
pub fn sweep(base: &RunConfig, grid: &Grid, threads: Option<usize>, out: Option<&Path>) -> Result<Vec<SweepRow>, RunError> {
    if grid.is_empty() {
        return Err(RunError::Config("empty grid".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| RunError::Config(format!("cannot start thread pool: {e}")))?;
    let cells = grid.cells();
    Ok(pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, &(mode, lambda, eta))| run_cell(base, i, mode, lambda, eta, out))
            .collect()
    }))
}

pub fn summary_csv(rows: &[SweepRow]) -> Result<Vec<u8>, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.into_inner().map_err(|e| RunError::Io(std::io::Error::other(e.to_string())))
}

/// Pivot of best test loss: one row per (λ, η), one column per mode.
pub fn grid_csv(grid: &Grid, rows: &[SweepRow]) -> Result<Vec<u8>, RunError> {
    let mut table: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    for (i, &(mode, lambda, eta)) in grid.cells().iter().enumerate() {
        let li = grid.lambda.iter().position(|&l| l == lambda).unwrap();
        let ei = grid.eta.iter().position(|&e| e == eta).unwrap();
        let mi = grid.mode.iter().position(|&m| m == mode).unwrap();
        let entry = table.entry((li, ei)).or_insert_with(|| vec![String::new(); grid.mode.len()]);
        entry[mi] = opt(rows[i].best_test_loss.or(rows[i].final_train_loss));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["lambda".to_string(), "eta".to_string()];
    header.extend(grid.mode.iter().map(|m| m.to_string()));
    w.write_record(&header)?;
    for ((li, ei), values) in table {
        let mut record = vec![num(grid.lambda[li]), num(grid.eta[ei])];
        record.extend(values);
        w.write_record(&record)?;
    }
    w.into_inner().map_err(|e| RunError::Io(std::io::Error::other(e.to_string())))
}

/// Runs the sweep, writing per-cell run directories, `summary.csv` and
/// `grid.csv` into `out`.
pub fn sweep_to_dir(base: &RunConfig, grid: &Grid, threads: Option<usize>, out: &Path) -> Result<Vec<SweepRow>, RunError> {
    fs::create_dir_all(out)?;
    let rows = sweep(base, grid, threads, Some(out))?;
    fs::write(out.join("summary.csv"), summary_csv(&rows)?)?;
    fs::write(out.join("grid.csv"), grid_csv(grid, &rows)?)?;
    Ok(rows)
}
