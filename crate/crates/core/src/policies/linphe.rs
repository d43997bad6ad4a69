use super::{argmax_random_tie, check_arm, check_reward, initial_arm, ArmStats, Policy, PolicyContext};
use crate::error::Result;
use crate::linalg::{GramState, Vector};
use crate::perturbation::PerturbationConfig;
use crate::rng::RngStream;

/// Perturbed-history exploration with a linear model.
///
/// Each round fits ridge regression to the observed rewards mixed with `a`
/// fresh Bernoulli(1/2) pseudo-rewards per observation. With per-arm sums
/// `V_i` and pseudo-reward sums `U_i ~ B(a T_i, 1/2)`, the estimate is
///
/// ```text
/// theta_tilde = G^{-1} sum_i x_i (V_i + U_i),   G = (a + 1) (lambda I + sum_l X_l X_l^T)
/// ```
///
/// which costs O(K d^2) per round regardless of the history length.
#[derive(Debug, Clone)]
pub struct LinPhe {
    label: String,
    features: Vec<Vector>,
    gram: GramState,
    stats: ArmStats,
    cfg: PerturbationConfig,
    theta_tilde: Vector,
}

impl LinPhe {
    pub fn new(ctx: &PolicyContext, cfg: PerturbationConfig, lambda: f64) -> Result<Self> {
        ctx.validate()?;
        let d = ctx.dim();
        Ok(Self {
            label: format!("linphe(a={})", cfg.a()),
            features: ctx.features.clone(),
            gram: GramState::new(d, lambda, cfg.a() + 1.0)?,
            stats: ArmStats::new(ctx.num_arms()),
            cfg,
            theta_tilde: Vector::zeros(d),
        })
    }

    pub fn with_label(mut self, label: String) -> Self {
        self.label = label;
        self
    }

    pub fn gram(&self) -> &GramState {
        &self.gram
    }

    pub fn stats(&self) -> &ArmStats {
        &self.stats
    }

    pub fn config(&self) -> PerturbationConfig {
        self.cfg
    }

    /// Last perturbed estimate computed by `select`.
    pub fn theta_tilde(&self) -> &Vector {
        &self.theta_tilde
    }

    /// Estimate for given per-arm pseudo-reward sums `U_i`.
    pub fn estimate_with_pseudo_sums(&self, pseudo: &[f64]) -> Vector {
        let d = self.gram.dim();
        let mut target = Vector::zeros(d);
        for ((x, v), u) in self.features.iter().zip(self.stats.cum_reward()).zip(pseudo) {
            let w = v + u;
            if w != 0.0 {
                target.axpy(w, x, 1.0);
            }
        }
        self.gram.solve(&target)
    }

    /// Draws fresh per-arm pseudo-reward sums.
    pub fn draw_pseudo_sums(&self, rng: &mut RngStream) -> Vec<f64> {
        self.stats
            .pulls()
            .iter()
            .map(|&t| self.cfg.pseudo_reward_count(t, rng) as f64)
            .collect()
    }

    /// Estimate with every pseudo-reward replaced by its mean 1/2. Only used
    /// for diagnostics; `select` always perturbs.
    pub fn theta_bar(&self) -> Vector {
        let halves: Vec<f64> = self
            .stats
            .pulls()
            .iter()
            .map(|&t| 0.5 * self.cfg.pseudo_count(t) as f64)
            .collect();
        self.estimate_with_pseudo_sums(&halves)
    }

    pub fn scores(&self, theta: &Vector) -> Vec<f64> {
        self.features.iter().map(|x| x.dot(theta)).collect()
    }
}

impl Policy for LinPhe {
    fn label(&self) -> &str {
        &self.label
    }

    fn select(&mut self, t: usize, rng: &mut RngStream) -> Result<usize> {
        if let Some(arm) = initial_arm(t, self.gram.dim(), self.features.len()) {
            return Ok(arm);
        }
        let pseudo = self.draw_pseudo_sums(rng);
        self.theta_tilde = self.estimate_with_pseudo_sums(&pseudo);
        let scores = self.scores(&self.theta_tilde);
        Ok(argmax_random_tie(&scores, rng))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.features.len())?;
        check_reward(reward)?;
        self.stats.record(arm, reward)?;
        self.gram.rank_one_update(&self.features[arm])
    }
}
