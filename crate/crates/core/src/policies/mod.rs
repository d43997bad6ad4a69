//! Bandit policies behind a common select/update interface.
//!
//! Every policy starts by pulling arms `K, K-1, ..., K-d+1` (1-based) in the
//! first `d` rounds, then acts on its model. Rounds are 1-based.

use serde::{Deserialize, Serialize};

use crate::environments::{BanditInstance, InstanceKind};
use crate::error::{PheError, Result};
use crate::glm::SolverOptions;
use crate::linalg::Vector;
use crate::perturbation::PerturbationConfig;
use crate::rng::RngStream;

mod eps_greedy;
mod linear_baselines;
mod linphe;
mod logistic_baselines;
mod logphe;

pub use eps_greedy::{exploration_rate, EpsGreedy};
pub use linear_baselines::{confidence_width, LinTs, LinUcb};
pub use linphe::LinPhe;
pub use logistic_baselines::{GlmUcb, LogTs, GLM_UCB_KAPPA};
pub use logphe::LogPhe;

/// A bandit policy.
pub trait Policy: Send {
    fn label(&self) -> &str;

    /// Arm to pull in round `t >= 1`.
    fn select(&mut self, t: usize, rng: &mut RngStream) -> Result<usize>;

    /// Feeds back the reward of the pulled arm.
    fn update(&mut self, arm: usize, reward: f64) -> Result<()>;
}

/// What a policy may know about the problem: the arm features, the horizon,
/// and a bound on the parameter norm (used by the confidence widths).
#[derive(Debug, Clone)]
pub struct PolicyContext {
    pub kind: InstanceKind,
    pub features: Vec<Vector>,
    pub horizon: usize,
    pub theta_norm: f64,
}

impl PolicyContext {
    pub fn from_instance(inst: &BanditInstance, horizon: usize) -> Self {
        Self {
            kind: inst.kind(),
            features: inst.features().to_vec(),
            horizon,
            theta_norm: inst.theta().norm(),
        }
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, |x| x.len())
    }

    pub fn num_arms(&self) -> usize {
        self.features.len()
    }

    /// Largest feature norm `L`.
    pub fn max_feature_norm(&self) -> f64 {
        self.features.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(PheError::InvalidParameter("policy needs at least one arm".into()));
        }
        if self.num_arms() < d {
            return Err(PheError::InvalidParameter(format!(
                "K = {} < d = {d}: initialization needs d distinct arms",
                self.num_arms()
            )));
        }
        if let Some(x) = self.features.iter().find(|x| x.len() != d) {
            return Err(PheError::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Per-arm pull counts and cumulative rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmStats {
    pulls: Vec<u64>,
    cum_reward: Vec<f64>,
}

impl ArmStats {
    pub fn new(num_arms: usize) -> Self {
        Self {
            pulls: vec![0; num_arms],
            cum_reward: vec![0.0; num_arms],
        }
    }

    pub fn record(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_reward(reward)?;
        let num_arms = self.pulls.len();
        let p = self
            .pulls
            .get_mut(arm)
            .ok_or(PheError::ArmOutOfRange { arm, num_arms })?;
        *p += 1;
        self.cum_reward[arm] += reward;
        Ok(())
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    pub fn cum_reward(&self) -> &[f64] {
        &self.cum_reward
    }

    pub fn rounds(&self) -> u64 {
        self.pulls.iter().sum()
    }
}

pub(crate) fn check_reward(y: f64) -> Result<()> {
    if (0.0..=1.0).contains(&y) {
        Ok(())
    } else {
        Err(PheError::InvalidReward(y))
    }
}

/// Arm pulled in an initialization round, or `None` once `t > d`.
pub fn initial_arm(t: usize, dim: usize, num_arms: usize) -> Option<usize> {
    (t >= 1 && t <= dim).then(|| num_arms - t)
}

/// Index of a maximal score, ties broken uniformly at random.
pub fn argmax_random_tie(scores: &[f64], rng: &mut RngStream) -> usize {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == best)
        .map(|(i, _)| i)
        .collect();
    match ties.len() {
        0 => 0,
        1 => ties[0],
        n => ties[rng.index(n)],
    }
}

pub(crate) fn check_arm(arm: usize, num_arms: usize) -> Result<()> {
    if arm < num_arms {
        Ok(())
    } else {
        Err(PheError::ArmOutOfRange { arm, num_arms })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    Linphe,
    Logphe,
    Linucb,
    Lints,
    EpsGreedy,
    GlmUcb,
    Logts,
}

/// Policy configuration record, e.g. `{"name": "linphe", "a": 0.5, "lambda": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub name: PolicyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl PolicySpec {
    pub fn new(name: PolicyName) -> Self {
        Self {
            name,
            a: None,
            lambda: None,
            v: None,
            tol: None,
            max_iter: None,
            label: None,
        }
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = Some(a);
        self
    }

    pub fn with_v(mut self, v: f64) -> Self {
        self.v = Some(v);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    /// Identifier used in output files.
    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let base = match self.name {
            PolicyName::Linphe => "linphe",
            PolicyName::Logphe => "logphe",
            PolicyName::Linucb => "linucb",
            PolicyName::Lints => "lints",
            PolicyName::EpsGreedy => "eps-greedy",
            PolicyName::GlmUcb => "glm-ucb",
            PolicyName::Logts => "logts",
        };
        match self.name {
            PolicyName::Linphe | PolicyName::Logphe => format!("{base}(a={})", self.a.unwrap_or(1.0)),
            PolicyName::Lints => format!("{base}(v={})", self.v.unwrap_or(1.0)),
            _ => base.to_string(),
        }
    }

    fn solver_options(&self) -> SolverOptions {
        let d = SolverOptions::default();
        SolverOptions {
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
        }
    }

    /// Checks parameter ranges without building anything.
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.a {
            PerturbationConfig::new(a)?;
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(PheError::InvalidParameter(format!("lambda must be positive, got {l}")));
            }
        }
        if let Some(v) = self.v {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PheError::InvalidParameter(format!("v must be >= 0, got {v}")));
            }
        }
        if let Some(t) = self.tol {
            if t.is_nan() || t <= 0.0 {
                return Err(PheError::InvalidParameter(format!("tol must be positive, got {t}")));
            }
        }
        Ok(())
    }

    pub fn build(&self, ctx: &PolicyContext) -> Result<Box<dyn Policy>> {
        self.validate()?;
        let label = self.label();
        let lambda = self.lambda.unwrap_or(1.0);
        let a = self.a.unwrap_or(1.0);
        Ok(match self.name {
            PolicyName::Linphe => Box::new(LinPhe::new(ctx, PerturbationConfig::new(a)?, lambda)?.with_label(label)),
            PolicyName::Logphe => Box::new(
                LogPhe::new(ctx, PerturbationConfig::new(a)?, lambda, self.solver_options())?.with_label(label),
            ),
            PolicyName::Linucb => Box::new(LinUcb::new(ctx, lambda)?.with_label(label)),
            PolicyName::Lints => Box::new(LinTs::new(ctx, lambda, self.v.unwrap_or(1.0))?.with_label(label)),
            PolicyName::EpsGreedy => Box::new(EpsGreedy::new(ctx, lambda, self.solver_options())?.with_label(label)),
            PolicyName::GlmUcb => Box::new(GlmUcb::new(ctx, lambda, self.solver_options())?.with_label(label)),
            PolicyName::Logts => Box::new(LogTs::new(ctx, lambda, self.solver_options())?.with_label(label)),
        })
    }
}

/// The default comparison for an instance kind: three perturbation scales
/// plus every baseline for that model.
pub fn default_policies(kind: InstanceKind) -> Vec<PolicySpec> {
    let phe = match kind {
        InstanceKind::Linear => PolicyName::Linphe,
        InstanceKind::Logistic => PolicyName::Logphe,
    };
    let mut specs: Vec<PolicySpec> = [2.0, 1.0, 0.5]
        .iter()
        .map(|&a| PolicySpec::new(phe).with_a(a))
        .collect();
    match kind {
        InstanceKind::Linear => {
            specs.push(PolicySpec::new(PolicyName::Linucb));
            specs.push(PolicySpec::new(PolicyName::Lints));
        }
        InstanceKind::Logistic => {
            specs.push(PolicySpec::new(PolicyName::GlmUcb));
            specs.push(PolicySpec::new(PolicyName::Logts));
        }
    }
    specs.push(PolicySpec::new(PolicyName::EpsGreedy));
    specs
}
