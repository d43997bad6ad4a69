use super::linear_baselines::confidence_width;
use super::{argmax_random_tie, check_arm, initial_arm, ArmStats, Policy, PolicyContext};
use crate::environments::sigmoid;
use crate::error::{PheError, Result};
use crate::glm::{SolverOptions, WeightedLogit};
use crate::linalg::{sample_mvn, spd_inverse, GramState, Vector};
use crate::rng::RngStream;

/// Lower bound on the derivative of the logistic mean function used by
/// GLM-UCB; 1/4 is its maximum, the most optimistic choice.
pub const GLM_UCB_KAPPA: f64 = 0.25;

/// MAP logistic fit under a `N(0, I / lambda)` prior, warm-started.
#[derive(Debug, Clone)]
struct MapFit {
    features: Vec<Vector>,
    stats: ArmStats,
    lambda: f64,
    opts: SolverOptions,
    theta: Vector,
}

impl MapFit {
    fn new(ctx: &PolicyContext, lambda: f64, opts: SolverOptions) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(PheError::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            features: ctx.features.clone(),
            stats: ArmStats::new(ctx.num_arms()),
            lambda,
            opts,
            theta: Vector::zeros(ctx.dim()),
        })
    }

    fn problem(&self) -> Result<WeightedLogit> {
        let mut prob = WeightedLogit::new(self.theta.len(), self.lambda / 2.0)?;
        for (i, x) in self.features.iter().enumerate() {
            prob.push(x.clone(), self.stats.cum_reward()[i], self.stats.pulls()[i] as f64)?;
        }
        Ok(prob)
    }

    fn refit(&mut self) -> Result<WeightedLogit> {
        let prob = self.problem()?;
        let res = prob.fit_from(self.theta.clone(), self.opts);
        if !res.converged {
            return Err(PheError::SolverDiverged {
                iterations: res.iterations,
                grad_norm: res.grad_norm,
            });
        }
        self.theta = res.theta;
        Ok(prob)
    }
}

/// GLM-UCB: `sigmoid(x' theta_hat) + beta / kappa * |x|_{G^{-1}}`.
#[derive(Debug, Clone)]
pub struct GlmUcb {
    label: String,
    fit: MapFit,
    gram: GramState,
    beta: f64,
}

impl GlmUcb {
    pub fn new(ctx: &PolicyContext, lambda: f64, opts: SolverOptions) -> Result<Self> {
        ctx.validate()?;
        let d = ctx.dim();
        Ok(Self {
            label: "glm-ucb".into(),
            fit: MapFit::new(ctx, lambda, opts)?,
            gram: GramState::new(d, lambda, 1.0)?,
            beta: confidence_width(d, ctx.horizon, ctx.max_feature_norm(), lambda, ctx.theta_norm),
        })
    }

    pub fn with_label(mut self, label: String) -> Self {
        self.label = label;
        self
    }

    /// Exploration bonus of `x`.
    pub fn bonus(&self, x: &Vector) -> f64 {
        self.beta / GLM_UCB_KAPPA * self.gram.quad_norm(x)
    }

    pub fn scores(&mut self) -> Result<Vec<f64>> {
        self.fit.refit()?;
        let theta = &self.fit.theta;
        Ok(self
            .fit
            .features
            .iter()
            .map(|x| sigmoid(x.dot(theta)) + self.bonus(x))
            .collect())
    }
}

impl Policy for GlmUcb {
    fn label(&self) -> &str {
        &self.label
    }

    fn select(&mut self, t: usize, rng: &mut RngStream) -> Result<usize> {
        if let Some(arm) = initial_arm(t, self.gram.dim(), self.fit.features.len()) {
            return Ok(arm);
        }
        let scores = self.scores()?;
        Ok(argmax_random_tie(&scores, rng))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.fit.features.len())?;
        self.fit.stats.record(arm, reward)?;
        self.gram.rank_one_update(&self.fit.features[arm])
    }
}

/// Logistic Thompson sampling with a Laplace approximation at the MAP estimate.
#[derive(Debug, Clone)]
pub struct LogTs {
    label: String,
    fit: MapFit,
}

impl LogTs {
    pub fn new(ctx: &PolicyContext, lambda: f64, opts: SolverOptions) -> Result<Self> {
        ctx.validate()?;
        Ok(Self {
            label: "logts".into(),
            fit: MapFit::new(ctx, lambda, opts)?,
        })
    }

    pub fn with_label(mut self, label: String) -> Self {
        self.label = label;
        self
    }

    /// One draw from `N(theta_map, H^{-1})`.
    pub fn sample_theta(&mut self, rng: &mut RngStream) -> Result<Vector> {
        let prob = self.fit.refit()?;
        let h = prob.hessian(&self.fit.theta);
        let cov = spd_inverse(&h)?;
        sample_mvn(&self.fit.theta, &cov, rng)
    }

    pub fn hessian(&mut self) -> Result<crate::linalg::Matrix> {
        let prob = self.fit.refit()?;
        Ok(prob.hessian(&self.fit.theta))
    }
}

impl Policy for LogTs {
    fn label(&self) -> &str {
        &self.label
    }

    fn select(&mut self, t: usize, rng: &mut RngStream) -> Result<usize> {
        if let Some(arm) = initial_arm(t, self.fit.theta.len(), self.fit.features.len()) {
            return Ok(arm);
        }
        let theta = self.sample_theta(rng)?;
        let scores: Vec<f64> = self.fit.features.iter().map(|x| x.dot(&theta)).collect();
        Ok(argmax_random_tie(&scores, rng))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.fit.features.len())?;
        self.fit.stats.record(arm, reward)
    }
}
