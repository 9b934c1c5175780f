//! Loss/gradient oracles with hand-derived gradients.

pub mod data;
mod logistic;
mod mlp;
mod quadratic;

pub use data::{
    make_blobs, make_linear_teacher, make_two_moons, DatasetSpec, Split, SyntheticDataset,
};
pub use logistic::{logistic_problem, LogisticProblem};
pub use mlp::{mlp_problem, Activation, MlpProblem};
pub use quadratic::{quadratic_problem, ridge_closed_form, QuadraticProblem};

use crate::error::Result;
use crate::numerics::{ParamVector, RandomSource};

/// Positions into a problem's training split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinibatchView {
    pub indices: Vec<usize>,
}

impl MinibatchView {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    /// Every training position in order.
    pub fn full(train_size: usize) -> Self {
        Self {
            indices: (0..train_size).collect(),
        }
    }

    pub fn batch_size(&self) -> usize {
        self.indices.len()
    }
}

/// Draws minibatches without replacement, reshuffling every epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochSampler {
    n: usize,
    batch_size: usize,
}

impl EpochSampler {
    /// # Panics
    /// If `n` or `batch_size` is zero.
    pub fn new(n: usize, batch_size: usize) -> Self {
        assert!(n > 0 && batch_size > 0, "sampler needs n > 0 and batch_size > 0");
        Self { n, batch_size }
    }

    /// Number of minibatches per epoch; the final one may be short.
    pub fn batches_per_epoch(&self) -> usize {
        self.n.div_ceil(self.batch_size)
    }

    pub fn epoch(&self, rng: &mut RandomSource) -> Vec<MinibatchView> {
        let mut perm: Vec<usize> = (0..self.n).collect();
        rng.shuffle(&mut perm);
        perm.chunks(self.batch_size)
            .map(|c| MinibatchView::new(c.to_vec()))
            .collect()
    }
}

/// A differentiable training objective.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Number of training samples addressable by a [`MinibatchView`].
    /// Deterministic problems report 1.
    fn train_size(&self) -> usize;

    /// Mean loss over the batch and its gradient.
    fn loss_grad(&self, theta: &ParamVector, batch: &MinibatchView) -> Result<(f64, ParamVector)>;

    fn loss(&self, theta: &ParamVector, batch: &MinibatchView) -> Result<f64> {
        Ok(self.loss_grad(theta, batch)?.0)
    }

    fn train_loss(&self, theta: &ParamVector) -> Result<f64> {
        self.loss(theta, &MinibatchView::full(self.train_size()))
    }

    /// Loss on the held-out split, if the problem has one.
    fn test_loss(&self, _theta: &ParamVector) -> Result<Option<f64>> {
        Ok(None)
    }

    fn initial_point(&self, rng: &mut RandomSource) -> ParamVector;

    /// Smallest distance of any non-differentiable pre-activation from its
    /// kink, for problems that have kinks.
    fn kink_margin(&self, _theta: &ParamVector, _batch: &MinibatchView) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_abs_error: f64,
    /// `‖g − g_fd‖ / max(‖g‖, ‖g_fd‖)`, or the absolute error when both vanish.
    pub rel_error: f64,
}

/// Compares the analytic gradient with central differences of step `h`.
pub fn gradient_check<P: Problem + ?Sized>(
    problem: &P,
    theta: &ParamVector,
    batch: &MinibatchView,
    h: f64,
) -> Result<GradientCheck> {
    let (_, grad) = problem.loss_grad(theta, batch)?;
    let mut probe = theta.to_vec();
    let mut diff_sq = 0.0;
    let mut fd_sq = 0.0;
    let mut max_abs: f64 = 0.0;
    for i in 0..theta.dim() {
        let x = probe[i];
        probe[i] = x + h;
        let up = problem.loss(&ParamVector::new(probe.clone())?, batch)?;
        probe[i] = x - h;
        let down = problem.loss(&ParamVector::new(probe.clone())?, batch)?;
        probe[i] = x;
        let fd = (up - down) / (2.0 * h);
        let err = (grad[i] - fd).abs();
        max_abs = max_abs.max(err);
        diff_sq += err * err;
        fd_sq += fd * fd;
    }
    let scale = grad.l2_norm().max(fd_sq.sqrt());
    let rel_error = if scale > 0.0 {
        diff_sq.sqrt() / scale
    } else {
        diff_sq.sqrt()
    };
    Ok(GradientCheck {
        max_abs_error: max_abs,
        rel_error,
    })
}
