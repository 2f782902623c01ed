//! Least-squares tasks and the gradient-descent refinement operator.
//!
//! For `L(theta) = 0.5 * ||X theta - y||^2` one full-batch step is the affine
//! map `theta -> M theta + eta X^T y` with `M = I - eta X^T X`. It contracts
//! towards the least-squares solution whenever `0 < eta < 2 / lambda_max`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type ModelParams = DVector<f64>;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;
/// Any coordinate above this magnitude aborts refinement.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

pub fn gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.tr_mul(x)
}

/// Fixed, irregular start vector for power iteration. Low-discrepancy entries
/// avoid the symmetric directions an all-ones start can be orthogonal to.
fn power_start(d: usize) -> DVector<f64> {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    let v = DVector::from_iterator(d, (0..d).map(|j| 1.0 + ((j as f64 + 1.0) * GOLDEN).fract()));
    let n = v.norm();
    v / n
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix.
pub fn lambda_max_of_gram(g: &DMatrix<f64>) -> Result<f64> {
    let d = g.nrows();
    if d == 0 || g.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateDesign("X^T X is the zero matrix".into()));
    }
    let mut v = power_start(d);
    let mut estimate = v.dot(&(g * &v));
    for _ in 0..POWER_MAX_ITERS {
        let w = g * &v;
        let norm = w.norm();
        if norm == 0.0 {
            // start vector landed in the null space; fall back to the largest diagonal direction
            let j = g.diagonal().imax();
            v = DVector::zeros(d);
            v[j] = 1.0;
            continue;
        }
        v = w / norm;
        let next = v.dot(&(g * &v));
        let converged = (next - estimate).abs() <= POWER_TOL * next.abs();
        estimate = next;
        if converged {
            break;
        }
    }
    Ok(estimate)
}

/// Largest eigenvalue of `X^T X` by power iteration on the Gram matrix.
pub fn lambda_max(x: &DMatrix<f64>) -> Result<f64> {
    lambda_max_of_gram(&gram(x))
}

/// `1 / lambda_max(X^T X)`.
pub fn default_step_size(x: &DMatrix<f64>) -> Result<f64> {
    Ok(1.0 / lambda_max(x)?)
}

/// Spectral norm of `I - eta G` for a symmetric `G`.
pub fn contraction_rate_of_gram(g: &DMatrix<f64>, eta: f64) -> f64 {
    let d = g.nrows();
    if d == 0 {
        return 0.0;
    }
    let m = DMatrix::identity(d, d) - g * eta;
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, e| acc.max(e.abs()))
}

/// Spectral norm of `I - eta X^T X`.
pub fn contraction_rate(x: &DMatrix<f64>, eta: f64) -> f64 {
    contraction_rate_of_gram(&gram(x), eta)
}

/// Step size, curvature and contraction factor of one task's GD operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionProfile {
    pub eta: f64,
    pub lambda_max: f64,
    pub rho: f64,
}

impl ContractionProfile {
    pub fn new(x: &DMatrix<f64>, eta: f64) -> Result<Self> {
        let g = gram(x);
        let lambda_max = lambda_max_of_gram(&g)?;
        if !(eta > 0.0 && eta < 2.0 / lambda_max) {
            return Err(Error::Config(format!(
                "step size {eta} outside (0, {})",
                2.0 / lambda_max
            )));
        }
        Ok(ContractionProfile {
            eta,
            lambda_max,
            rho: contraction_rate_of_gram(&g, eta),
        })
    }

    pub fn with_default_step(x: &DMatrix<f64>) -> Result<Self> {
        let lambda_max = lambda_max(x)?;
        Self::new(x, 1.0 / lambda_max)
    }
}

/// Precomputed `X^T X` and `X^T y` of one task, plus its step size.
#[derive(Debug, Clone)]
pub struct Refiner {
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    eta: f64,
}

impl Refiner {
    pub fn new(x: &DMatrix<f64>, y: &DVector<f64>, eta: f64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Shape(format!(
                "X has {} rows but y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Config(format!(
                "step size must be positive, got {eta}"
            )));
        }
        Ok(Refiner {
            gram: gram(x),
            xty: x.tr_mul(y),
            eta,
        })
    }

    /// Builds the operator with `eta = 1 / lambda_max(X^T X)`.
    pub fn with_default_step(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        let eta = default_step_size(x)?;
        Self::new(x, y, eta)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn contraction_rate(&self) -> f64 {
        contraction_rate_of_gram(&self.gram, self.eta)
    }

    /// `steps` full-batch gradient steps from `theta0`.
    pub fn refine(&self, theta0: &DVector<f64>, steps: u64) -> Result<DVector<f64>> {
        if theta0.len() != self.dim() {
            return Err(Error::Shape(format!(
                "parameters have length {} but the task has {} features",
                theta0.len(),
                self.dim()
            )));
        }
        let mut theta = theta0.clone();
        for step in 0..steps {
            let grad = &self.gram * &theta - &self.xty;
            theta.axpy(-self.eta, &grad, 1.0);
            if theta
                .iter()
                .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
            {
                return Err(Error::Divergence {
                    step: step as usize + 1,
                    eta: self.eta,
                });
            }
        }
        Ok(theta)
    }
}

/// `b` gradient steps on `0.5 * ||X theta - y||^2` with step size `eta`.
pub fn refine(
    theta0: &DVector<f64>,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    b: u64,
    eta: f64,
) -> Result<DVector<f64>> {
    Refiner::new(x, y, eta)?.refine(theta0, b)
}

/// `(X^T X + lambda I)^{-1} X^T y` via Cholesky.
pub fn ridge_solution(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "X has {} rows but y has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Config(format!(
            "ridge penalty must be nonnegative, got {lambda}"
        )));
    }
    let d = x.ncols();
    let system = gram(x) + DMatrix::identity(d, d) * lambda;
    let scale = system.diagonal().max().max(f64::MIN_POSITIVE);
    let chol = system.cholesky().ok_or_else(|| {
        Error::SingularDesign(format!("X^T X + {lambda} I is not positive definite"))
    })?;
    let pivots = chol.l_dirty().diagonal();
    if pivots.iter().any(|p| p * p <= 1e-13 * scale) {
        return Err(Error::SingularDesign(format!(
            "X^T X + {lambda} I is numerically singular"
        )));
    }
    Ok(chol.solve(&x.tr_mul(y)))
}

/// Scale-aware ridge penalty `1e-3 * trace(X^T X) / d`.
pub fn default_ridge_lambda(x: &DMatrix<f64>) -> f64 {
    let d = x.ncols().max(1) as f64;
    1e-3 * x.iter().map(|v| v * v).sum::<f64>() / d
}

/// Frobenius norm of `(X^T X)^{-1} X^T`, i.e. `sqrt(trace((X^T X)^{-1}))`.
pub fn pseudo_inverse_frobenius(x: &DMatrix<f64>) -> Result<f64> {
    let d = x.ncols();
    let chol = gram(x)
        .cholesky()
        .ok_or_else(|| Error::SingularDesign("X^T X is not positive definite".into()))?;
    let inv = chol.solve(&DMatrix::identity(d, d));
    let a = inv * x.transpose();
    Ok(a.norm())
}

/// Root mean squared prediction error; zero for an empty split.
pub fn rmse(theta: &DVector<f64>, x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let residual = x * theta - y;
    (residual.norm_squared() / y.len() as f64).sqrt()
}

/// Half squared residual norm.
pub fn loss(theta: &DVector<f64>, x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    0.5 * (x * theta - y).norm_squared()
}
