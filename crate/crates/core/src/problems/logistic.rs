use super::data::{Split, SyntheticDataset};
use super::{MinibatchView, Problem};
use crate::error::{Error, Result};
use crate::numerics::{ParamVector, RandomSource};

/// Binary logistic regression with mean cross-entropy loss.
///
/// Parameters are the feature weights, followed by a bias when the problem is
/// built with an intercept.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    data: SyntheticDataset,
    train: Vec<usize>,
    test: Vec<usize>,
    intercept: bool,
}

/// Logistic regression without an intercept.
pub fn logistic_problem(dataset: SyntheticDataset) -> Result<LogisticProblem> {
    LogisticProblem::new(dataset, false)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticProblem {
    pub fn new(dataset: SyntheticDataset, intercept: bool) -> Result<Self> {
        if dataset.n_classes != 2 || dataset.labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidProblem(
                "logistic regression needs binary labels".into(),
            ));
        }
        if dataset.n_features() == 0 && !intercept {
            return Err(Error::InvalidProblem("dataset has no features".into()));
        }
        let train = dataset.indices(Split::Train);
        let test = dataset.indices(Split::Test);
        if train.is_empty() {
            return Err(Error::InvalidProblem("empty training split".into()));
        }
        Ok(Self {
            data: dataset,
            train,
            test,
            intercept,
        })
    }

    pub fn dataset(&self) -> &SyntheticDataset {
        &self.data
    }

    fn score(&self, theta: &[f64], x: &[f64]) -> f64 {
        let mut z = x.iter().zip(theta).fold(0.0, |acc, (a, b)| acc + a * b);
        if self.intercept {
            z += theta[x.len()];
        }
        z
    }

    fn evaluate(&self, theta: &ParamVector, samples: impl Iterator<Item = usize>, with_grad: bool) -> Result<(f64, Vec<f64>, usize)> {
        theta.ensure_dim(self.dim())?;
        let d = self.data.n_features();
        let mut loss = 0.0;
        let mut grad = vec![0.0; if with_grad { self.dim() } else { 0 }];
        let mut count = 0;
        for i in samples {
            let x = &self.data.inputs[i];
            let y = self.data.labels[i] as f64;
            let z = self.score(theta, x);
            loss += softplus(z) - y * z;
            if with_grad {
                let r = sigmoid(z) - y;
                for j in 0..d {
                    grad[j] += r * x[j];
                }
                if self.intercept {
                    grad[d] += r;
                }
            }
            count += 1;
        }
        Ok((loss, grad, count))
    }

    /// Fraction of training samples on the wrong side of the decision boundary.
    pub fn train_error(&self, theta: &ParamVector) -> f64 {
        let wrong = self
            .train
            .iter()
            .filter(|&&i| {
                let z = self.score(theta, &self.data.inputs[i]);
                usize::from(z > 0.0) != self.data.labels[i]
            })
            .count();
        wrong as f64 / self.train.len() as f64
    }
}

impl Problem for LogisticProblem {
    fn name(&self) -> &str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.data.n_features() + usize::from(self.intercept)
    }

    fn train_size(&self) -> usize {
        self.train.len()
    }

    fn loss_grad(&self, theta: &ParamVector, batch: &MinibatchView) -> Result<(f64, ParamVector)> {
        if batch.indices.is_empty() {
            return Err(Error::InvalidArgument("empty minibatch".into()));
        }
        let samples = batch.indices.iter().map(|&p| self.train[p]);
        let (loss, grad, n) = self.evaluate(theta, samples, true)?;
        let n = n as f64;
        let grad = ParamVector::checked(grad.into_iter().map(|g| g / n).collect(), "gradient")?;
        Ok((loss / n, grad))
    }

    fn test_loss(&self, theta: &ParamVector) -> Result<Option<f64>> {
        if self.test.is_empty() {
            return Ok(None);
        }
        let (loss, _, n) = self.evaluate(theta, self.test.iter().copied(), false)?;
        Ok(Some(loss / n as f64))
    }

    fn initial_point(&self, _rng: &mut RandomSource) -> ParamVector {
        ParamVector::zeros(self.dim())
    }
}
