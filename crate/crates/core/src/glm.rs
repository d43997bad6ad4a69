//! Newton solver for l2-regularized logistic regression over grouped counts.
//!
//! Observations are grouped by feature vector: a row `(x, ones, total)` stands
//! for `total` Bernoulli labels at `x`, of which `ones` are positive. The
//! minimized objective is
//!
//! ```text
//! lambda * |theta|^2 - sum_rows [ ones * log s(x'theta) + (total - ones) * log(1 - s(x'theta)) ]
//! ```
//!
//! so the cost of one Newton step depends on the number of rows, not on the
//! number of observations they summarize.

use nalgebra::{Cholesky, Dyn};
use serde::{Deserialize, Serialize};

use crate::environments::sigmoid;
use crate::error::{PheError, Result};
use crate::linalg::{Matrix, Vector};

/// `log(sigmoid(s))` without overflow.
#[inline]
pub fn log_sigmoid(s: f64) -> f64 {
    -(f64::max(-s, 0.0) + (-s.abs()).exp().ln_1p())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitRow {
    pub x: Vector,
    pub ones: f64,
    pub total: f64,
}

/// A grouped, weighted logistic regression problem.
#[derive(Debug, Clone)]
pub struct WeightedLogit {
    dim: usize,
    rows: Vec<LogitRow>,
    lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub theta: Vector,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

impl WeightedLogit {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(PheError::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            dim,
            rows: Vec::new(),
            lambda,
        })
    }

    pub fn push(&mut self, x: Vector, ones: f64, total: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(PheError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !(ones >= 0.0 && ones <= total && total.is_finite()) {
            return Err(PheError::InvalidParameter(format!(
                "row needs 0 <= ones <= total, got ones = {ones}, total = {total}"
            )));
        }
        if total > 0.0 {
            self.rows.push(LogitRow { x, ones, total });
        }
        Ok(())
    }

    pub fn with_row(mut self, x: Vector, ones: f64, total: f64) -> Result<Self> {
        self.push(x, ones, total)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rows(&self) -> &[LogitRow] {
        &self.rows
    }

    pub fn objective(&self, theta: &Vector) -> f64 {
        let mut f = self.lambda * theta.norm_squared();
        for r in &self.rows {
            let s = r.x.dot(theta);
            f -= r.ones * log_sigmoid(s) + (r.total - r.ones) * log_sigmoid(-s);
        }
        f
    }

    pub fn gradient(&self, theta: &Vector) -> Vector {
        let mut g = theta * (2.0 * self.lambda);
        for r in &self.rows {
            let p = sigmoid(r.x.dot(theta));
            g.axpy(-(r.ones - r.total * p), &r.x, 1.0);
        }
        g
    }

    pub fn hessian(&self, theta: &Vector) -> Matrix {
        let mut h = Matrix::identity(self.dim, self.dim) * (2.0 * self.lambda);
        for r in &self.rows {
            let p = sigmoid(r.x.dot(theta));
            h.ger(r.total * p * (1.0 - p), &r.x, &r.x, 1.0);
        }
        h
    }

    /// Newton's method from `theta = 0`.
    pub fn fit(&self, opts: SolverOptions) -> SolverResult {
        self.fit_from(Vector::zeros(self.dim), opts)
    }

    /// Newton's method with step halving, started from `start`.
    pub fn fit_from(&self, start: Vector, opts: SolverOptions) -> SolverResult {
        let mut theta = start;
        let mut f = self.objective(&theta);
        let mut g = self.gradient(&theta);
        let mut grad_norm = g.norm();
        let mut iterations = 0;
        while grad_norm > opts.tol && iterations < opts.max_iter {
            iterations += 1;
            let h = self.hessian(&theta);
            let Some(chol) = Cholesky::<f64, Dyn>::new(h) else {
                break;
            };
            let dir = chol.solve(&g);
            let mut step = 1.0;
            let mut accepted = false;
            while step > 1e-12 {
                let cand = &theta - &dir * step;
                let f_new = self.objective(&cand);
                if f_new < f {
                    accepted = true;
                } else if f_new <= f + 8.0 * f64::EPSILON * f.abs() {
                    // Objective differences are below rounding: fall back to
                    // the gradient to decide.
                    accepted = self.gradient(&cand).norm() < grad_norm;
                }
                if accepted {
                    theta = cand;
                    f = f_new.min(f);
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            g = self.gradient(&theta);
            grad_norm = g.norm();
        }
        SolverResult {
            theta,
            iterations,
            grad_norm,
            converged: grad_norm <= opts.tol,
        }
    }
}
