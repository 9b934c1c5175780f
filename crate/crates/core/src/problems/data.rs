//! Synthetic datasets standing in for image/text benchmarks.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RandomSource;

/// Fraction of samples assigned to the training split.
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Labeled points with a fixed train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub name: String,
    pub seed: u64,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub split: Vec<Split>,
}

impl SyntheticDataset {
    /// Shuffles the samples with `rng` and assigns the first 80% to training.
    fn assemble(
        name: &str,
        seed: u64,
        mut samples: Vec<(Vec<f64>, usize)>,
        n_classes: usize,
        rng: &mut RandomSource,
    ) -> Self {
        rng.shuffle(&mut samples);
        let n = samples.len();
        let n_train = ((n as f64) * TRAIN_FRACTION).floor() as usize;
        let split = (0..n)
            .map(|i| if i < n_train { Split::Train } else { Split::Test })
            .collect();
        let (inputs, labels) = samples.into_iter().unzip();
        Self {
            name: name.to_string(),
            seed,
            inputs,
            labels,
            n_classes,
            split,
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn indices(&self, which: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == which).collect()
    }

    /// Rescales every feature to zero mean and unit variance using
    /// statistics of the training split only.
    pub fn standardized(&self) -> Self {
        let train = self.indices(Split::Train);
        let d = self.n_features();
        let n = train.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for &i in &train {
            for (j, x) in self.inputs[i].iter().enumerate() {
                mean[j] += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &i in &train {
            for (j, x) in self.inputs[i].iter().enumerate() {
                var[j] += (x - mean[j]).powi(2);
            }
        }
        let std: Vec<f64> = var
            .iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        let inputs = self
            .inputs
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, x)| (x - mean[j]) / std[j])
                    .collect()
            })
            .collect();
        Self {
            inputs,
            ..self.clone()
        }
    }

    /// Writes `x0,...,x{d-1},label,split` rows with a header.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.n_features()).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        header.push("split".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.inputs[i].iter().map(|x| x.to_string()).collect();
            row.push(self.labels[i].to_string());
            row.push(self.split[i].as_str().to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Two interleaving half-circles of radius 1, class 0 on top.
///
/// Angles are evenly spaced on each moon; `noise` is the standard deviation
/// of Gaussian jitter added to both coordinates.
pub fn make_two_moons(n: usize, noise: f64, seed: u64) -> Result<SyntheticDataset> {
    if n < 2 {
        return Err(Error::InvalidArgument("two_moons needs n >= 2".into()));
    }
    let mut rng = RandomSource::new(seed);
    let n_outer = n / 2;
    let n_inner = n - n_outer;
    let angle = |k: usize, count: usize| {
        if count > 1 {
            PI * k as f64 / (count - 1) as f64
        } else {
            0.0
        }
    };
    let mut samples = Vec::with_capacity(n);
    for k in 0..n_outer {
        let t = angle(k, n_outer);
        samples.push((vec![t.cos(), t.sin()], 0));
    }
    for k in 0..n_inner {
        let t = angle(k, n_inner);
        samples.push((vec![1.0 - t.cos(), 0.5 - t.sin()], 1));
    }
    if noise > 0.0 {
        for (x, _) in samples.iter_mut() {
            for xi in x.iter_mut() {
                *xi += noise * rng.normal();
            }
        }
    }
    Ok(SyntheticDataset::assemble("two_moons", seed, samples, 2, &mut rng))
}

/// Isotropic Gaussian blobs; sample `i` belongs to center `i mod k`.
pub fn make_blobs(
    n: usize,
    centers: &[Vec<f64>],
    spread: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    if n < 2 {
        return Err(Error::InvalidArgument("blobs needs n >= 2".into()));
    }
    if centers.len() < 2 {
        return Err(Error::InvalidArgument("blobs needs at least two centers".into()));
    }
    let d = centers[0].len();
    if d == 0 || centers.iter().any(|c| c.len() != d) {
        return Err(Error::InvalidArgument(
            "blob centers must share a non-zero dimension".into(),
        ));
    }
    let mut rng = RandomSource::new(seed);
    let k = centers.len();
    let samples = (0..n)
        .map(|i| {
            let c = &centers[i % k];
            let x = c.iter().map(|ci| ci + spread * rng.normal()).collect();
            (x, i % k)
        })
        .collect();
    Ok(SyntheticDataset::assemble("blobs", seed, samples, k, &mut rng))
}

/// Gaussian inputs labeled by the sign of a random linear teacher, with each
/// label flipped independently with probability `label_noise`.
pub fn make_linear_teacher(
    n: usize,
    dim: usize,
    label_noise: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    if n < 2 || dim == 0 {
        return Err(Error::InvalidArgument(
            "linear_teacher needs n >= 2 and dim >= 1".into(),
        ));
    }
    if !(0.0..=0.5).contains(&label_noise) {
        return Err(Error::InvalidArgument("label_noise must lie in [0, 0.5]".into()));
    }
    let mut rng = RandomSource::new(seed);
    let teacher: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    let samples = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
            let score: f64 = x.iter().zip(&teacher).map(|(a, b)| a * b).sum();
            let mut y = usize::from(score > 0.0);
            if rng.uniform() < label_noise {
                y = 1 - y;
            }
            (x, y)
        })
        .collect();
    Ok(SyntheticDataset::assemble("linear_teacher", seed, samples, 2, &mut rng))
}

/// Declarative dataset description, as found in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    TwoMoons {
        n: usize,
        #[serde(default)]
        noise: f64,
        seed: u64,
    },
    Blobs {
        n: usize,
        centers: Vec<Vec<f64>>,
        spread: f64,
        seed: u64,
    },
    LinearTeacher {
        n: usize,
        dim: usize,
        #[serde(default)]
        label_noise: f64,
        seed: u64,
    },
}

impl DatasetSpec {
    pub const GENERATORS: [&'static str; 3] = ["two_moons", "blobs", "linear_teacher"];

    pub fn generate(&self) -> Result<SyntheticDataset> {
        match self {
            DatasetSpec::TwoMoons { n, noise, seed } => make_two_moons(*n, *noise, *seed),
            DatasetSpec::Blobs {
                n,
                centers,
                spread,
                seed,
            } => make_blobs(*n, centers, *spread, *seed),
            DatasetSpec::LinearTeacher {
                n,
                dim,
                label_noise,
                seed,
            } => make_linear_teacher(*n, *dim, *label_noise, *seed),
        }
    }

    /// Default parameters for a named generator.
    pub fn named(name: &str, seed: u64, n: usize) -> Result<Self> {
        Ok(match name {
            "two_moons" => DatasetSpec::TwoMoons {
                n,
                noise: 0.1,
                seed,
            },
            "blobs" => DatasetSpec::Blobs {
                n,
                centers: vec![vec![-2.0, -2.0], vec![2.0, 2.0]],
                spread: 1.0,
                seed,
            },
            "linear_teacher" => DatasetSpec::LinearTeacher {
                n,
                dim: 10,
                label_noise: 0.05,
                seed,
            },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown generator `{other}` (expected one of {:?})",
                    Self::GENERATORS
                )))
            }
        })
    }
}
