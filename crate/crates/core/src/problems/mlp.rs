use serde::{Deserialize, Serialize};

use super::data::{Split, SyntheticDataset};
use super::{MinibatchView, Problem};
use crate::error::{Error, Result};
use crate::numerics::{ParamVector, RandomSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative from the pre-activation `z` and output `a`; relu uses 0 at 0.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fully connected classifier with softmax cross-entropy loss.
///
/// Parameter layout is layer-major: for each layer, the `out × in` weight
/// matrix in row-major order followed by the `out` biases.
#[derive(Debug, Clone)]
pub struct MlpProblem {
    data: SyntheticDataset,
    train: Vec<usize>,
    test: Vec<usize>,
    layers: Vec<usize>,
    activation: Activation,
    /// Offset of each layer's weight block in the flat parameter vector.
    offsets: Vec<usize>,
    dim: usize,
}

/// `layers` lists every width including input and output, e.g. `[2, 16, 2]`.
pub fn mlp_problem(
    dataset: SyntheticDataset,
    layers: &[usize],
    activation: Activation,
) -> Result<MlpProblem> {
    if layers.len() < 3 {
        return Err(Error::InvalidProblem(
            "an MLP needs at least one hidden layer".into(),
        ));
    }
    if layers.contains(&0) {
        return Err(Error::InvalidProblem("layer widths must be >= 1".into()));
    }
    if layers[0] != dataset.n_features() {
        return Err(Error::InvalidProblem(format!(
            "input width {} does not match {} dataset features",
            layers[0],
            dataset.n_features()
        )));
    }
    if *layers.last().unwrap() != dataset.n_classes {
        return Err(Error::InvalidProblem(format!(
            "output width {} does not match {} classes",
            layers.last().unwrap(),
            dataset.n_classes
        )));
    }
    let train = dataset.indices(Split::Train);
    if train.is_empty() {
        return Err(Error::InvalidProblem("empty training split".into()));
    }
    let test = dataset.indices(Split::Test);
    let mut offsets = Vec::with_capacity(layers.len() - 1);
    let mut dim = 0;
    for w in layers.windows(2) {
        offsets.push(dim);
        dim += w[0] * w[1] + w[1];
    }
    Ok(MlpProblem {
        data: dataset,
        train,
        test,
        layers: layers.to_vec(),
        activation,
        offsets,
        dim,
    })
}

/// Per-sample forward pass: pre-activations and activations of every layer.
struct Trace {
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
}

impl MlpProblem {
    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn n_layers(&self) -> usize {
        self.layers.len() - 1
    }

    fn forward(&self, theta: &[f64], x: &[f64]) -> Trace {
        let mut pre = Vec::with_capacity(self.n_layers());
        let mut act = Vec::with_capacity(self.n_layers() + 1);
        act.push(x.to_vec());
        for l in 0..self.n_layers() {
            let (n_in, n_out) = (self.layers[l], self.layers[l + 1]);
            let w = &theta[self.offsets[l]..self.offsets[l] + n_in * n_out];
            let b = &theta[self.offsets[l] + n_in * n_out..self.offsets[l] + n_in * n_out + n_out];
            let input = &act[l];
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    row.iter().zip(input).fold(b[o], |acc, (a, c)| acc + a * c)
                })
                .collect();
            let a = if l + 1 < self.n_layers() {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
            act.push(a);
        }
        Trace { pre, act }
    }

    /// Softmax probabilities and cross-entropy of the logits against `label`.
    fn softmax_ce(logits: &[f64], label: usize) -> (Vec<f64>, f64) {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let loss = total.ln() + max - logits[label];
        (exps.into_iter().map(|e| e / total).collect(), loss)
    }

    fn accumulate(&self, theta: &[f64], sample: usize, grad: &mut [f64]) -> f64 {
        let x = &self.data.inputs[sample];
        let y = self.data.labels[sample];
        let trace = self.forward(theta, x);
        let (probs, loss) = Self::softmax_ce(trace.act.last().unwrap(), y);
        let mut delta = probs;
        delta[y] -= 1.0;
        for l in (0..self.n_layers()).rev() {
            let (n_in, n_out) = (self.layers[l], self.layers[l + 1]);
            let off = self.offsets[l];
            let input = &trace.act[l];
            for o in 0..n_out {
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += delta[o] * a;
                }
                grad[off + n_in * n_out + o] += delta[o];
            }
            if l == 0 {
                break;
            }
            let w = &theta[off..off + n_in * n_out];
            delta = (0..n_in)
                .map(|i| {
                    let back: f64 = (0..n_out).map(|o| w[o * n_in + i] * delta[o]).sum();
                    back * self.activation.derivative(trace.pre[l - 1][i], trace.act[l][i])
                })
                .collect();
        }
        loss
    }

    fn mean_loss(&self, theta: &[f64], samples: &[usize]) -> f64 {
        let total: f64 = samples
            .iter()
            .map(|&i| {
                let trace = self.forward(theta, &self.data.inputs[i]);
                Self::softmax_ce(trace.act.last().unwrap(), self.data.labels[i]).1
            })
            .sum();
        total / samples.len() as f64
    }

    /// Fraction of misclassified samples in `split`.
    pub fn error_rate(&self, theta: &ParamVector, split: Split) -> f64 {
        let samples = if split == Split::Train { &self.train } else { &self.test };
        if samples.is_empty() {
            return 0.0;
        }
        let wrong = samples
            .iter()
            .filter(|&&i| {
                let trace = self.forward(theta, &self.data.inputs[i]);
                let logits = trace.act.last().unwrap();
                let pred = (0..logits.len())
                    .max_by(|&a, &b| logits[a].total_cmp(&logits[b]))
                    .unwrap();
                pred != self.data.labels[i]
            })
            .count();
        wrong as f64 / samples.len() as f64
    }
}

impl Problem for MlpProblem {
    fn name(&self) -> &str {
        "mlp"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn train_size(&self) -> usize {
        self.train.len()
    }

    fn loss_grad(&self, theta: &ParamVector, batch: &MinibatchView) -> Result<(f64, ParamVector)> {
        theta.ensure_dim(self.dim)?;
        if batch.indices.is_empty() {
            return Err(Error::InvalidArgument("empty minibatch".into()));
        }
        let mut grad = vec![0.0; self.dim];
        let mut loss = 0.0;
        for &p in &batch.indices {
            loss += self.accumulate(theta, self.train[p], &mut grad);
        }
        let n = batch.indices.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((loss / n, ParamVector::checked(grad, "gradient")?))
    }

    fn loss(&self, theta: &ParamVector, batch: &MinibatchView) -> Result<f64> {
        theta.ensure_dim(self.dim)?;
        let samples: Vec<usize> = batch.indices.iter().map(|&p| self.train[p]).collect();
        Ok(self.mean_loss(theta, &samples))
    }

    fn test_loss(&self, theta: &ParamVector) -> Result<Option<f64>> {
        theta.ensure_dim(self.dim)?;
        if self.test.is_empty() {
            return Ok(None);
        }
        Ok(Some(self.mean_loss(theta, &self.test)))
    }

    /// Weights ~ N(0, 1/fan_in), biases zero.
    fn initial_point(&self, rng: &mut RandomSource) -> ParamVector {
        let mut theta = Vec::with_capacity(self.dim);
        for w in self.layers.windows(2) {
            let std = 1.0 / (w[0] as f64).sqrt();
            theta.extend((0..w[0] * w[1]).map(|_| std * rng.normal()));
            theta.extend(std::iter::repeat_n(0.0, w[1]));
        }
        ParamVector::new(theta).expect("finite initialization")
    }

    fn kink_margin(&self, theta: &ParamVector, batch: &MinibatchView) -> Option<f64> {
        if self.activation != Activation::Relu {
            return None;
        }
        let mut margin = f64::INFINITY;
        for &p in &batch.indices {
            let trace = self.forward(theta, &self.data.inputs[self.train[p]]);
            for z in &trace.pre[..trace.pre.len() - 1] {
                margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            }
        }
        Some(margin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::data::{make_blobs, make_two_moons};
    use crate::problems::gradient_check;

    #[test]
    fn layout_dimension() {
        let d = make_two_moons(50, 0.1, 1).unwrap();
        let p = mlp_problem(d, &[2, 8, 2], Activation::Tanh).unwrap();
        assert_eq!(p.dim(), 2 * 8 + 8 + 8 * 2 + 2);
    }

    #[test]
    fn zero_weights_balanced_classes() {
        // Build a balanced training split explicitly.
        let mut d = make_two_moons(40, 0.1, 2).unwrap();
        d.split = (0..40).map(|_| Split::Train).collect();
        let p = mlp_problem(d, &[2, 4, 2], Activation::Tanh).unwrap();
        let theta = ParamVector::zeros(p.dim());
        let (loss, grad) = p.loss_grad(&theta, &MinibatchView::full(40)).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        let out_bias = &grad[p.dim() - 2..];
        assert!(out_bias.iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn finite_difference_2_8_2() {
        let d = make_two_moons(200, 0.1, 5).unwrap().standardized();
        let p = mlp_problem(d, &[2, 8, 2], Activation::Tanh).unwrap();
        let mut rng = RandomSource::new(5);
        let batch = MinibatchView::new((0..32).collect());
        for _ in 0..10 {
            let theta = p.initial_point(&mut rng);
            let check = gradient_check(&p, &theta, &batch, 1e-6).unwrap();
            assert!(check.rel_error <= 1e-5, "{check:?}");
        }
    }

    #[test]
    fn relu_subgradient_and_kink_free_probes() {
        let d = make_blobs(120, &[vec![0.0, 0.0, 1.0], vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0]], 0.7, 3)
            .unwrap()
            .standardized();
        let p = mlp_problem(d, &[3, 6, 5, 3], Activation::Relu).unwrap();
        assert_eq!(Activation::Relu.derivative(0.0, 0.0), 0.0);
        let mut rng = RandomSource::new(11);
        let batch = MinibatchView::new((0..24).collect());
        let mut checked = 0;
        while checked < 10 {
            let theta = p.initial_point(&mut rng);
            if p.kink_margin(&theta, &batch).unwrap() < 1e-4 {
                continue;
            }
            let check = gradient_check(&p, &theta, &batch, 1e-6).unwrap();
            assert!(check.rel_error <= 1e-5, "{check:?}");
            checked += 1;
        }
    }

    #[test]
    fn width_mismatch_rejected() {
        let d = make_two_moons(20, 0.1, 1).unwrap();
        assert!(mlp_problem(d.clone(), &[3, 4, 2], Activation::Tanh).is_err());
        assert!(mlp_problem(d.clone(), &[2, 4, 3], Activation::Tanh).is_err());
        assert!(mlp_problem(d, &[2, 2], Activation::Tanh).is_err());
    }
}
