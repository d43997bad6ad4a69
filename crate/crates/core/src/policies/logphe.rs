use super::{argmax_random_tie, check_arm, initial_arm, ArmStats, Policy, PolicyContext};
use crate::error::{PheError, Result};
use crate::glm::{SolverOptions, WeightedLogit};
use crate::linalg::Vector;
use crate::perturbation::PerturbationConfig;
use crate::rng::RngStream;

/// Perturbed-history exploration with a logistic model.
///
/// Each arm contributes one grouped row to a regularized logistic fit: its
/// `T_i` observed labels plus `ceil(a T_i)` Bernoulli(1/2) pseudo-labels, of
/// which `V_i + U_i` are positive. The fit is warm-started from the previous
/// round's estimate.
#[derive(Debug, Clone)]
pub struct LogPhe {
    label: String,
    features: Vec<Vector>,
    stats: ArmStats,
    cfg: PerturbationConfig,
    lambda: f64,
    opts: SolverOptions,
    theta_tilde: Vector,
}

impl LogPhe {
    pub fn new(ctx: &PolicyContext, cfg: PerturbationConfig, lambda: f64, opts: SolverOptions) -> Result<Self> {
        ctx.validate()?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(PheError::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            label: format!("logphe(a={})", cfg.a()),
            features: ctx.features.clone(),
            stats: ArmStats::new(ctx.num_arms()),
            cfg,
            lambda,
            opts,
            theta_tilde: Vector::zeros(ctx.dim()),
        })
    }

    pub fn with_label(mut self, label: String) -> Self {
        self.label = label;
        self
    }

    pub fn stats(&self) -> &ArmStats {
        &self.stats
    }

    pub fn theta_tilde(&self) -> &Vector {
        &self.theta_tilde
    }

    /// Grouped problem for given per-arm pseudo-reward sums.
    pub fn problem(&self, pseudo: &[f64]) -> Result<WeightedLogit> {
        let d = self.theta_tilde.len();
        let mut prob = WeightedLogit::new(d, self.lambda)?;
        for (i, x) in self.features.iter().enumerate() {
            let pulls = self.stats.pulls()[i];
            if pulls == 0 {
                continue;
            }
            let total = (pulls + self.cfg.pseudo_count(pulls)) as f64;
            prob.push(x.clone(), self.stats.cum_reward()[i] + pseudo[i], total)?;
        }
        Ok(prob)
    }

    /// Fits the perturbed model, starting from the last estimate.
    pub fn fit_perturbed(&mut self, pseudo: &[f64]) -> Result<Vector> {
        let prob = self.problem(pseudo)?;
        let res = prob.fit_from(self.theta_tilde.clone(), self.opts);
        if !res.converged {
            return Err(PheError::SolverDiverged {
                iterations: res.iterations,
                grad_norm: res.grad_norm,
            });
        }
        self.theta_tilde = res.theta.clone();
        Ok(res.theta)
    }
}

impl Policy for LogPhe {
    fn label(&self) -> &str {
        &self.label
    }

    fn select(&mut self, t: usize, rng: &mut RngStream) -> Result<usize> {
        if let Some(arm) = initial_arm(t, self.theta_tilde.len(), self.features.len()) {
            return Ok(arm);
        }
        let pseudo: Vec<f64> = self
            .stats
            .pulls()
            .iter()
            .map(|&p| self.cfg.pseudo_reward_count(p, rng) as f64)
            .collect();
        let theta = self.fit_perturbed(&pseudo)?;
        let scores: Vec<f64> = self.features.iter().map(|x| x.dot(&theta)).collect();
        Ok(argmax_random_tie(&scores, rng))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.features.len())?;
        self.stats.record(arm, reward)
    }
}
