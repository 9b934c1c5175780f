//! Learning-rate schedules resolving `η_t` for every optimizer step.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleKind {
    Constant,
    /// Multiply by `decay_factor` at every listed epoch.
    Milestones {
        milestones: Vec<u64>,
        #[serde(default = "default_decay_factor")]
        decay_factor: f64,
    },
    /// Cosine annealing with warm restarts. Periods are `t0`, `t0·t_mult`, ...
    CosineRestarts {
        t0: u64,
        #[serde(default = "default_t_mult")]
        t_mult: u64,
        #[serde(default)]
        eta_min: f64,
    },
}

fn default_decay_factor() -> f64 {
    0.1
}

fn default_t_mult() -> u64 {
    2
}

impl Default for ScheduleKind {
    fn default() -> Self {
        ScheduleKind::Constant
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub eta0: f64,
    pub steps_per_epoch: u64,
}

impl ScheduleSpec {
    pub fn new(kind: ScheduleKind, eta0: f64, steps_per_epoch: u64) -> Result<Self> {
        let spec = Self {
            kind,
            eta0,
            steps_per_epoch,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(eta0: f64) -> Self {
        Self {
            kind: ScheduleKind::Constant,
            eta0,
            steps_per_epoch: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSchedule(msg));
        if !(self.eta0.is_finite() && self.eta0 > 0.0) {
            return bad(format!("eta0 must be finite and > 0, got {}", self.eta0));
        }
        if self.steps_per_epoch == 0 {
            return bad("steps_per_epoch must be >= 1".into());
        }
        match &self.kind {
            ScheduleKind::Constant => {}
            ScheduleKind::Milestones {
                milestones,
                decay_factor,
            } => {
                if milestones.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("milestones must be strictly increasing".into());
                }
                if !(*decay_factor > 0.0 && *decay_factor < 1.0) {
                    return bad(format!("decay_factor must lie in (0, 1), got {decay_factor}"));
                }
            }
            ScheduleKind::CosineRestarts { t0, t_mult, eta_min } => {
                if *t0 == 0 || *t_mult == 0 {
                    return bad("t0 and t_mult must be >= 1".into());
                }
                if !(eta_min.is_finite() && *eta_min >= 0.0 && *eta_min <= self.eta0) {
                    return bad(format!("eta_min must lie in [0, eta0], got {eta_min}"));
                }
            }
        }
        Ok(())
    }

    /// Learning rate for step `step_in_epoch` of `epoch` (both zero-based).
    pub fn lr_at(&self, epoch: u64, step_in_epoch: u64) -> f64 {
        match &self.kind {
            ScheduleKind::Constant => self.eta0,
            ScheduleKind::Milestones {
                milestones,
                decay_factor,
            } => {
                let passed = milestones.iter().filter(|&&m| m <= epoch).count();
                self.eta0 * decay_factor.powi(passed as i32)
            }
            ScheduleKind::CosineRestarts { t0, t_mult, eta_min } => {
                let (start, period) = current_period(*t0, *t_mult, epoch);
                // Position within the period in steps. The last step stays
                // one step short of eta_min, so the rate never reaches zero.
                let spe = self.steps_per_epoch;
                let total = period * spe;
                let pos = (epoch - start) * spe + step_in_epoch.min(spe - 1);
                let frac = pos as f64 / total as f64;
                eta_min + 0.5 * (self.eta0 - eta_min) * (1.0 + (PI * frac).cos())
            }
        }
    }
}

/// Start epoch and length of the restart period containing `epoch`.
fn current_period(t0: u64, t_mult: u64, epoch: u64) -> (u64, u64) {
    let (mut start, mut period) = (0u64, t0);
    while epoch >= start + period {
        start += period;
        period = period.saturating_mul(t_mult);
    }
    (start, period)
}

/// Epochs at which a warm restart happens: `t0`, `t0 + t0·t_mult`, ... up to
/// and including `total_epochs`.
pub fn restart_boundaries(t0: u64, t_mult: u64, total_epochs: u64) -> Vec<u64> {
    let mut out = vec![];
    if t0 == 0 || t_mult == 0 {
        return out;
    }
    let (mut end, mut period) = (t0, t0);
    while end <= total_epochs {
        out.push(end);
        period = period.saturating_mul(t_mult);
        end = match end.checked_add(period) {
            Some(e) => e,
            None => break,
        };
    }
    out
}
