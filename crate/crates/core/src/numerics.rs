//! Dense vector arithmetic and the seeded random source.
//!
//! Every reduction runs left to right over the entries in index order, so the
//! same input always produces the same bits.

use std::ops::Deref;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A non-empty vector of finite `f64` values.
///
/// Holds parameters, gradients and every per-dimension optimizer buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    /// Validates that `values` is non-empty and finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::checked(values, "vector")
    }

    /// Same as [`ParamVector::new`] but names the offending quantity on failure.
    pub fn checked(values: Vec<f64>, context: &'static str) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(index) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { context, index });
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::filled(dim, 0.0)
    }

    /// # Panics
    /// If `dim == 0` or `value` is not finite.
    pub fn filled(dim: usize, value: f64) -> Self {
        assert!(dim >= 1, "ParamVector needs dim >= 1");
        assert!(value.is_finite(), "ParamVector entries must be finite");
        Self(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn mean(&self) -> f64 {
        sum(&self.0) / self.0.len() as f64
    }

    pub fn sq_l2_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, x| acc + x * x)
    }

    pub fn l2_norm(&self) -> f64 {
        self.sq_l2_norm().sqrt()
    }

    pub fn clip(&self, lo: f64, hi: f64) -> Result<ParamVector> {
        clip(self, lo, hi)
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }

    /// Element-wise map. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ParamVector> {
        ParamVector::new(self.0.iter().map(|&x| f(x)).collect())
    }

    /// Whether every entry equals the first one bitwise.
    pub fn is_constant(&self) -> bool {
        let first = self.0[0].to_bits();
        self.0.iter().all(|x| x.to_bits() == first)
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ParamVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        ParamVector::new(values)
    }
}

fn sum(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, x| acc + x)
}

/// Arithmetic mean, summed left to right.
pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(sum(values) / values.len() as f64)
}

/// Sum of squared entries.
pub fn sq_l2_norm(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(values.iter().fold(0.0, |acc, x| acc + x * x))
}

/// Element-wise `max(lo, min(hi, v_i))`.
pub fn clip(v: &ParamVector, lo: f64, hi: f64) -> Result<ParamVector> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidBounds { lo, hi });
    }
    Ok(ParamVector(v.0.iter().map(|x| x.min(hi).max(lo)).collect()))
}

/// Deterministic random stream backed by ChaCha8.
///
/// ChaCha8 output is specified independently of platform and word size, so a
/// seed fixes every draw. OS entropy is never consulted.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for sub-task `index`, seeded with `seed ^ splitmix64(index)`.
    pub fn derive_seed(seed: u64, index: u64) -> u64 {
        seed ^ splitmix64(index)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform_vector(&mut self, dim: usize) -> ParamVector {
        ParamVector((0..dim).map(|_| self.uniform()).collect())
    }

    pub fn normal_vector(&mut self, dim: usize, std: f64) -> ParamVector {
        ParamVector((0..dim).map(|_| std * self.normal()).collect())
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Neumaier compensated sum, kept here as the reference for `mean`.
    fn compensated_sum(values: &[f64]) -> f64 {
        let mut s = 0.0f64;
        let mut c = 0.0f64;
        for &x in values {
            let t = s + x;
            if s.abs() >= x.abs() {
                c += (s - t) + x;
            } else {
                c += (x - t) + s;
            }
            s = t;
        }
        s + c
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean(&[1.0, 4.0]).unwrap(), 2.5);
        assert!((mean(&[0.3; 17]).unwrap() - 0.3).abs() <= 4.0 * f64::EPSILON * 0.3);
        assert_eq!(mean(&[]), Err(Error::EmptyVector));
    }

    #[test]
    fn mean_matches_compensated_sum() {
        let v = RandomSource::new(7).uniform_vector(1000);
        let oracle = compensated_sum(&v) / 1000.0;
        let got = v.mean();
        assert!(((got - oracle) / oracle).abs() <= 1e-12);
    }

    #[test]
    fn sq_norm_examples() {
        assert_eq!(sq_l2_norm(&[3.0, 4.0]).unwrap(), 25.0);
        assert_eq!(ParamVector::filled(13, 1.0).sq_l2_norm(), 13.0);
        let v = RandomSource::new(1).normal_vector(100, 1.0);
        let mut naive = 0.0;
        for i in 0..v.dim() {
            naive += v[i] * v[i];
        }
        assert!(((v.sq_l2_norm() - naive) / naive).abs() <= 1e-12);
    }

    #[test]
    fn clip_examples() {
        let v = ParamVector::new(vec![-1.0, 0.5, 2.0]).unwrap();
        assert_eq!(v.clip(0.0, 1.0).unwrap().as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(v.clip(f64::NEG_INFINITY, f64::INFINITY).unwrap(), v);
        let w = ParamVector::new(vec![0.95]).unwrap();
        assert_eq!(w.clip(0.0, 1.0 - 1e-3).unwrap().as_slice(), &[0.95]);
        assert!(matches!(v.clip(1.0, 0.0), Err(Error::InvalidBounds { .. })));
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert_eq!(ParamVector::new(vec![]), Err(Error::EmptyVector));
        assert!(matches!(
            ParamVector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(ParamVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn same_seed_same_stream() {
        let a = RandomSource::new(99).normal_vector(64, 1.0);
        let b = RandomSource::new(99).normal_vector(64, 1.0);
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = RandomSource::new(100).normal_vector(64, 1.0);
        assert_ne!(a, c);
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e6f64..1e6, 1..64)
    }

    proptest! {
        #[test]
        fn mean_is_homogeneous(values in vec_strategy(), alpha in -1e3f64..1e3) {
            let v = ParamVector::new(values).unwrap();
            let scaled = v.map(|x| alpha * x).unwrap();
            let lhs = scaled.mean();
            let rhs = alpha * v.mean();
            // Each product rounds once; bound the drift by the magnitudes involved.
            let scale = v.iter().map(|x| (alpha * x).abs()).fold(0.0, f64::max);
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * scale * v.dim() as f64 + f64::MIN_POSITIVE);
        }

        #[test]
        fn sq_norm_nonnegative(values in vec_strategy()) {
            let v = ParamVector::new(values).unwrap();
            let n = v.sq_l2_norm();
            prop_assert!(n >= 0.0);
            prop_assert_eq!(n == 0.0, v.iter().all(|&x| x == 0.0));
        }

        #[test]
        fn clip_idempotent(values in vec_strategy(), a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let v = ParamVector::new(values).unwrap();
            let once = v.clip(lo, hi).unwrap();
            let twice = once.clip(lo, hi).unwrap();
            prop_assert!(once.iter().zip(twice.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }

        #[test]
        fn seeded_vectors_bitwise_equal(seed in any::<u64>(), dim in 1usize..50) {
            let a = RandomSource::new(seed).uniform_vector(dim);
            let b = RandomSource::new(seed).uniform_vector(dim);
            prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
