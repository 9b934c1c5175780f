use nalgebra::{DMatrix, DVector};

use super::{MinibatchView, Problem};
use crate::error::{Error, Result};
use crate::numerics::{ParamVector, RandomSource};

/// `L(θ) = ½ θᵀAθ − bᵀθ` with symmetric positive-definite `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    a: Vec<Vec<f64>>,
    b: ParamVector,
}

/// Validates `a` (square, symmetric, positive-definite) and builds the problem.
pub fn quadratic_problem(a: Vec<Vec<f64>>, b: ParamVector) -> Result<QuadraticProblem> {
    let n = b.dim();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidProblem(format!(
            "A must be {n}x{n} to match b"
        )));
    }
    if a.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidProblem("A has non-finite entries".into()));
    }
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in 0..i {
            if (a[i][j] - a[j][i]).abs() > 1e-12 * scale.max(1.0) {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }
    if to_matrix(&a).cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(QuadraticProblem { a, b })
}

fn to_matrix(a: &[Vec<f64>]) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| a[i][j])
}

/// Solves `(A + λI)θ = b` by LU decomposition.
pub fn ridge_closed_form(a: &[Vec<f64>], b: &ParamVector, lambda_eff: f64) -> Result<ParamVector> {
    let n = b.dim();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.len(),
        });
    }
    let mut m = to_matrix(a);
    for i in 0..n {
        m[(i, i)] += lambda_eff;
    }
    let rhs = DVector::from_column_slice(b);
    let x = m.lu().solve(&rhs).ok_or(Error::Singular)?;
    ParamVector::checked(x.iter().copied().collect(), "ridge solution").map_err(|_| Error::Singular)
}

impl QuadraticProblem {
    /// Random SPD instance `A = MᵀM/n + ½I`, `b ~ N(0, I)`, with `M` standard
    /// normal. Eigenvalues of `A` lie roughly in `[0.5, 4.5]`.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        let mut rng = RandomSource::new(seed);
        let m: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..dim).map(|_| rng.normal()).collect())
            .collect();
        let mut a = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut s = 0.0;
                for row in &m {
                    s += row[i] * row[j];
                }
                let v = s / dim as f64 + if i == j { 0.5 } else { 0.0 };
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        let b = rng.normal_vector(dim, 1.0);
        quadratic_problem(a, b)
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &ParamVector {
        &self.b
    }

    pub fn ridge_solution(&self, lambda_eff: f64) -> Result<ParamVector> {
        ridge_closed_form(&self.a, &self.b, lambda_eff)
    }

    fn a_times(&self, theta: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .map(|row| row.iter().zip(theta).fold(0.0, |acc, (x, y)| acc + x * y))
            .collect()
    }
}

impl Problem for QuadraticProblem {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.b.dim()
    }

    fn train_size(&self) -> usize {
        1
    }

    fn loss_grad(&self, theta: &ParamVector, _batch: &MinibatchView) -> Result<(f64, ParamVector)> {
        theta.ensure_dim(self.dim())?;
        let at = self.a_times(theta);
        let mut loss = 0.0;
        let mut grad = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            loss += 0.5 * theta[i] * at[i] - self.b[i] * theta[i];
            grad.push(at[i] - self.b[i]);
        }
        Ok((loss, ParamVector::checked(grad, "gradient")?))
    }

    fn initial_point(&self, rng: &mut RandomSource) -> ParamVector {
        rng.normal_vector(self.dim(), 1.0)
    }
}
