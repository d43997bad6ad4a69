use super::{argmax_random_tie, check_arm, check_reward, initial_arm, ArmStats, Policy, PolicyContext};
use crate::environments::InstanceKind;
use crate::error::{PheError, Result};
use crate::glm::{SolverOptions, WeightedLogit};
use crate::linalg::{GramState, Vector};
use crate::rng::RngStream;

/// `eps_t = min(1, 0.05 / (2 sqrt(t)))`.
pub fn exploration_rate(t: usize) -> f64 {
    f64::min(1.0, 0.05 / (2.0 * (t as f64).sqrt()))
}

#[derive(Debug, Clone)]
enum Model {
    Ridge {
        gram: GramState,
        b: Vector,
    },
    Logistic {
        lambda: f64,
        opts: SolverOptions,
        theta: Vector,
    },
}

/// Epsilon-greedy on a ridge (linear instances) or MAP logistic (logistic
/// instances) fit.
#[derive(Debug, Clone)]
pub struct EpsGreedy {
    label: String,
    features: Vec<Vector>,
    stats: ArmStats,
    model: Model,
}

impl EpsGreedy {
    /// `lambda` is the prior precision; the logistic fit minimizes the
    /// negative log-likelihood plus `lambda / 2 |theta|^2`.
    pub fn new(ctx: &PolicyContext, lambda: f64, opts: SolverOptions) -> Result<Self> {
        ctx.validate()?;
        let d = ctx.dim();
        let model = match ctx.kind {
            InstanceKind::Linear => Model::Ridge {
                gram: GramState::new(d, lambda, 1.0)?,
                b: Vector::zeros(d),
            },
            InstanceKind::Logistic => Model::Logistic {
                lambda,
                opts,
                theta: Vector::zeros(d),
            },
        };
        Ok(Self {
            label: "eps-greedy".into(),
            features: ctx.features.clone(),
            stats: ArmStats::new(ctx.num_arms()),
            model,
        })
    }

    pub fn with_label(mut self, label: String) -> Self {
        self.label = label;
        self
    }

    fn dim(&self) -> usize {
        self.features[0].len()
    }

    /// Current point estimate (refits the logistic model).
    pub fn estimate(&mut self) -> Result<Vector> {
        match &mut self.model {
            Model::Ridge { gram, b } => Ok(gram.solve(b)),
            Model::Logistic { lambda, opts, theta } => {
                let mut prob = WeightedLogit::new(theta.len(), *lambda / 2.0)?;
                for (i, x) in self.features.iter().enumerate() {
                    prob.push(x.clone(), self.stats.cum_reward()[i], self.stats.pulls()[i] as f64)?;
                }
                let res = prob.fit_from(theta.clone(), *opts);
                if !res.converged {
                    return Err(PheError::SolverDiverged {
                        iterations: res.iterations,
                        grad_norm: res.grad_norm,
                    });
                }
                *theta = res.theta.clone();
                Ok(res.theta)
            }
        }
    }

    /// Greedy arm for a given estimate.
    pub fn greedy_arm(&self, theta: &Vector, rng: &mut RngStream) -> usize {
        let scores: Vec<f64> = self.features.iter().map(|x| x.dot(theta)).collect();
        argmax_random_tie(&scores, rng)
    }
}

impl Policy for EpsGreedy {
    fn label(&self) -> &str {
        &self.label
    }

    fn select(&mut self, t: usize, rng: &mut RngStream) -> Result<usize> {
        if let Some(arm) = initial_arm(t, self.dim(), self.features.len()) {
            return Ok(arm);
        }
        if rng.uniform() < exploration_rate(t) {
            return Ok(rng.index(self.features.len()));
        }
        let theta = self.estimate()?;
        Ok(self.greedy_arm(&theta, rng))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.features.len())?;
        check_reward(reward)?;
        self.stats.record(arm, reward)?;
        if let Model::Ridge { gram, b } = &mut self.model {
            gram.rank_one_update(&self.features[arm])?;
            b.axpy(reward, &self.features[arm], 1.0);
        }
        Ok(())
    }
}
