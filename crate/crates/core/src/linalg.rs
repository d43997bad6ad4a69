//! Small dense linear algebra: the regularized Gram state with a maintained
//! inverse, plus multivariate normal sampling.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{PheError, Result};
use crate::rng::RngStream;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Number of rank-one updates between direct re-inversions of the Gram matrix.
pub const REFRESH_PERIOD: usize = 512;

/// Positive-definite Gram matrix `G = scale * (lambda * I + sum x x^T)` together
/// with its inverse, maintained by Sherman-Morrison updates.
#[derive(Debug, Clone)]
pub struct GramState {
    gram: Matrix,
    inv: Matrix,
    lambda: f64,
    scale: f64,
    updates_since_refresh: usize,
    refresh_period: usize,
}

impl GramState {
    pub fn new(dim: usize, lambda: f64, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(PheError::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(PheError::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(PheError::InvalidParameter(format!(
                "scale must be positive, got {scale}"
            )));
        }
        let diag = lambda * scale;
        Ok(Self {
            gram: Matrix::identity(dim, dim) * diag,
            inv: Matrix::identity(dim, dim) / diag,
            lambda,
            scale,
            updates_since_refresh: 0,
            refresh_period: REFRESH_PERIOD,
        })
    }

    /// Overrides the refresh period (mostly useful for tests).
    pub fn with_refresh_period(mut self, period: usize) -> Self {
        self.refresh_period = period.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inv
    }

    pub fn updates_since_refresh(&self) -> usize {
        self.updates_since_refresh
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(PheError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `G <- G + scale * x x^T`, with the inverse updated in O(d^2).
    pub fn rank_one_update(&mut self, x: &Vector) -> Result<()> {
        self.check_dim(x)?;
        if x.iter().all(|&v| v == 0.0) {
            return Ok(());
        }
        self.gram.ger(self.scale, x, x, 1.0);

        let gx = &self.inv * x;
        let denom = 1.0 + self.scale * x.dot(&gx);
        self.inv.ger(-self.scale / denom, &gx, &gx, 1.0);

        self.updates_since_refresh += 1;
        if self.updates_since_refresh >= self.refresh_period {
            self.refresh()?;
        }
        Ok(())
    }

    /// Recomputes the inverse from the Gram matrix by Cholesky factorization.
    pub fn refresh(&mut self) -> Result<()> {
        self.inv = spd_inverse(&self.gram)?;
        self.updates_since_refresh = 0;
        Ok(())
    }

    /// `sqrt(x^T G^{-1} x)`.
    pub fn quad_norm(&self, x: &Vector) -> f64 {
        x.dot(&(&self.inv * x)).max(0.0).sqrt()
    }

    /// `G^{-1} b`.
    pub fn solve(&self, b: &Vector) -> Vector {
        &self.inv * b
    }

    /// Largest absolute entry of `G G^{-1} - I`.
    pub fn identity_residual(&self) -> f64 {
        let n = self.dim();
        let prod = &self.gram * &self.inv;
        (prod - Matrix::identity(n, n)).amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.gram)
    }
}

/// Symmetrized inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(m: &Matrix) -> Result<Matrix> {
    let chol = Cholesky::<f64, Dyn>::new(m.clone()).ok_or(PheError::NotPositiveDefinite)?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// One draw from `N(mean, cov)` via the lower Cholesky factor of `cov`.
pub fn sample_mvn(mean: &Vector, cov: &Matrix, rng: &mut RngStream) -> Result<Vector> {
    if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
        return Err(PheError::DimensionMismatch {
            expected: mean.len(),
            got: cov.nrows(),
        });
    }
    let chol = Cholesky::<f64, Dyn>::new(cov.clone()).ok_or(PheError::NotPositiveDefinite)?;
    let z = Vector::from_fn(mean.len(), |_, _| rng.normal());
    Ok(mean + chol.l() * z)
}
