use super::{argmax_random_tie, check_arm, check_reward, initial_arm, Policy, PolicyContext};
use crate::error::{PheError, Result};
use crate::linalg::{sample_mvn, GramState, Vector};
use crate::rng::RngStream;

/// Confidence radius `1/2 sqrt(d log(n + n^2 L^2 / (d lambda))) + sqrt(lambda) L_theta`
/// for rewards in `[0, 1]` (1/2-sub-Gaussian noise) with confidence `1 - 1/n`.
pub fn confidence_width(dim: usize, horizon: usize, feature_norm: f64, lambda: f64, theta_norm: f64) -> f64 {
    let d = dim as f64;
    let n = horizon.max(1) as f64;
    let l2 = feature_norm * feature_norm;
    0.5 * (d * (n + n * n * l2 / (d * lambda)).ln()).sqrt() + lambda.sqrt() * theta_norm
}

/// Ridge statistics shared by the linear baselines.
#[derive(Debug, Clone)]
struct Ridge {
    gram: GramState,
    b: Vector,
}

impl Ridge {
    fn new(dim: usize, lambda: f64) -> Result<Self> {
        Ok(Self {
            gram: GramState::new(dim, lambda, 1.0)?,
            b: Vector::zeros(dim),
        })
    }

    fn update(&mut self, x: &Vector, y: f64) -> Result<()> {
        self.gram.rank_one_update(x)?;
        self.b.axpy(y, x, 1.0);
        Ok(())
    }

    fn estimate(&self) -> Vector {
        self.gram.solve(&self.b)
    }
}

/// Optimism in the face of uncertainty with a ridge-regression ellipsoid.
#[derive(Debug, Clone)]
pub struct LinUcb {
    label: String,
    features: Vec<Vector>,
    ridge: Ridge,
    beta: f64,
}

impl LinUcb {
    pub fn new(ctx: &PolicyContext, lambda: f64) -> Result<Self> {
        ctx.validate()?;
        let d = ctx.dim();
        Ok(Self {
            label: "linucb".into(),
            features: ctx.features.clone(),
            ridge: Ridge::new(d, lambda)?,
            beta: confidence_width(d, ctx.horizon, ctx.max_feature_norm(), lambda, ctx.theta_norm),
        })
    }

    pub fn with_label(mut self, label: String) -> Self {
        self.label = label;
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn estimate(&self) -> Vector {
        self.ridge.estimate()
    }

    pub fn width(&self, arm: usize) -> f64 {
        self.ridge.gram.quad_norm(&self.features[arm])
    }

    /// Upper confidence bound of every arm.
    pub fn scores(&self) -> Vec<f64> {
        let theta = self.estimate();
        self.features
            .iter()
            .map(|x| x.dot(&theta) + self.beta * self.ridge.gram.quad_norm(x))
            .collect()
    }
}

impl Policy for LinUcb {
    fn label(&self) -> &str {
        &self.label
    }

    fn select(&mut self, t: usize, rng: &mut RngStream) -> Result<usize> {
        if let Some(arm) = initial_arm(t, self.ridge.gram.dim(), self.features.len()) {
            return Ok(arm);
        }
        Ok(argmax_random_tie(&self.scores(), rng))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.features.len())?;
        check_reward(reward)?;
        self.ridge.update(&self.features[arm], reward)
    }
}

/// Linear Thompson sampling: `theta ~ N(theta_hat, v^2 G^{-1})`, which is the
/// exact posterior under a `N(0, I / lambda)` prior and unit-variance noise
/// when `v = 1`.
#[derive(Debug, Clone)]
pub struct LinTs {
    label: String,
    features: Vec<Vector>,
    ridge: Ridge,
    v: f64,
}

impl LinTs {
    pub fn new(ctx: &PolicyContext, lambda: f64, v: f64) -> Result<Self> {
        ctx.validate()?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(PheError::InvalidParameter(format!("v must be >= 0, got {v}")));
        }
        Ok(Self {
            label: format!("lints(v={v})"),
            features: ctx.features.clone(),
            ridge: Ridge::new(ctx.dim(), lambda)?,
            v,
        })
    }

    pub fn with_label(mut self, label: String) -> Self {
        self.label = label;
        self
    }

    pub fn estimate(&self) -> Vector {
        self.ridge.estimate()
    }

    /// One posterior draw.
    pub fn sample_theta(&self, rng: &mut RngStream) -> Result<Vector> {
        let mean = self.estimate();
        if self.v == 0.0 {
            return Ok(mean);
        }
        let cov = self.ridge.gram.inverse() * (self.v * self.v);
        sample_mvn(&mean, &cov, rng)
    }
}

impl Policy for LinTs {
    fn label(&self) -> &str {
        &self.label
    }

    fn select(&mut self, t: usize, rng: &mut RngStream) -> Result<usize> {
        if let Some(arm) = initial_arm(t, self.ridge.gram.dim(), self.features.len()) {
            return Ok(arm);
        }
        let theta = self.sample_theta(rng)?;
        let scores: Vec<f64> = self.features.iter().map(|x| x.dot(&theta)).collect();
        Ok(argmax_random_tie(&scores, rng))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.features.len())?;
        check_reward(reward)?;
        self.ridge.update(&self.features[arm], reward)
    }
}
