//! Synthetic linear and logistic bandit instances with Bernoulli rewards.

use serde::{Deserialize, Serialize};

use crate::error::{PheError, Result};
use crate::linalg::Vector;
use crate::rng::{RngStream, INSTANCE_DOMAIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Linear,
    Logistic,
}

impl std::fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InstanceKind::Linear => f.write_str("linear"),
            InstanceKind::Logistic => f.write_str("logistic"),
        }
    }
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// A fixed bandit problem: arm features, the true parameter, and derived
/// per-arm means and gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    kind: InstanceKind,
    features: Vec<Vector>,
    theta: Vector,
    means: Vec<f64>,
    gaps: Vec<f64>,
    optimal_arm: usize,
    seed: Option<u64>,
}

impl BanditInstance {
    /// Builds an instance from explicit features and parameter.
    ///
    /// Ties on the best mean are allowed here; `optimal_arm` is then the first
    /// maximizer. The generators never return tied instances.
    pub fn from_parts(kind: InstanceKind, features: Vec<Vector>, theta: Vector, seed: Option<u64>) -> Result<Self> {
        let d = theta.len();
        if d == 0 {
            return Err(PheError::InvalidParameter("theta must be non-empty".into()));
        }
        if features.is_empty() {
            return Err(PheError::InvalidParameter("instance needs at least one arm".into()));
        }
        for x in &features {
            if x.len() != d {
                return Err(PheError::DimensionMismatch {
                    expected: d,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(PheError::InvalidParameter("non-finite feature".into()));
            }
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(PheError::InvalidParameter("non-finite theta".into()));
        }
        let means: Vec<f64> = features
            .iter()
            .map(|x| {
                let s = x.dot(&theta);
                match kind {
                    InstanceKind::Linear => s,
                    InstanceKind::Logistic => sigmoid(s),
                }
            })
            .collect();
        if kind == InstanceKind::Linear {
            if let Some(m) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
                return Err(PheError::InvalidParameter(format!(
                    "linear instance has mean {m} outside [0, 1]"
                )));
            }
        }
        let mut optimal_arm = 0;
        for (i, &m) in means.iter().enumerate() {
            if m > means[optimal_arm] {
                optimal_arm = i;
            }
        }
        let best = means[optimal_arm];
        let gaps = means.iter().map(|m| best - m).collect();
        Ok(Self {
            kind,
            features,
            theta,
            means,
            gaps,
            optimal_arm,
            seed,
        })
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn num_arms(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[Vector] {
        &self.features
    }

    pub fn theta(&self) -> &Vector {
        &self.theta
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn optimal_arm(&self) -> usize {
        self.optimal_arm
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn has_unique_optimum(&self) -> bool {
        let best = self.means[self.optimal_arm];
        self.means.iter().filter(|&&m| m == best).count() == 1
    }

    /// Largest feature norm.
    pub fn max_feature_norm(&self) -> f64 {
        self.features.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Bernoulli reward of `arm`.
    pub fn draw_reward(&self, arm: usize, rng: &mut RngStream) -> Result<f64> {
        let mu = *self.means.get(arm).ok_or(PheError::ArmOutOfRange {
            arm,
            num_arms: self.num_arms(),
        })?;
        Ok(if rng.uniform() < mu { 1.0 } else { 0.0 })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&InstanceDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(s)?;
        doc.try_into()
    }
}

/// On-disk form of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub kind: InstanceKind,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub features: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
    pub seed: Option<u64>,
}

impl From<&BanditInstance> for InstanceDoc {
    fn from(inst: &BanditInstance) -> Self {
        Self {
            kind: inst.kind,
            d: inst.dim(),
            k: inst.num_arms(),
            features: inst.features.iter().map(|x| x.iter().copied().collect()).collect(),
            theta: inst.theta.iter().copied().collect(),
            seed: inst.seed,
        }
    }
}

impl TryFrom<InstanceDoc> for BanditInstance {
    type Error = PheError;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        if doc.theta.len() != doc.d {
            return Err(PheError::DimensionMismatch {
                expected: doc.d,
                got: doc.theta.len(),
            });
        }
        if doc.features.len() != doc.k {
            return Err(PheError::Format(format!(
                "K = {} but {} feature rows",
                doc.k,
                doc.features.len()
            )));
        }
        let features = doc.features.into_iter().map(Vector::from_vec).collect();
        BanditInstance::from_parts(doc.kind, features, Vector::from_vec(doc.theta), doc.seed)
    }
}

/// Uniform draw from the `dim`-dimensional ball of the given radius.
pub fn sample_ball(dim: usize, radius: f64, rng: &mut RngStream) -> Vector {
    loop {
        let g = Vector::from_fn(dim, |_, _| rng.normal());
        let norm = g.norm();
        if norm > 0.0 {
            let r = radius * rng.uniform().powf(1.0 / dim as f64);
            return g * (r / norm);
        }
    }
}

fn check_shape(d: usize, k: usize) -> Result<()> {
    if d < 2 {
        return Err(PheError::InvalidParameter(format!("d must be at least 2, got {d}")));
    }
    if k < d {
        return Err(PheError::InvalidParameter(format!(
            "K = {k} < d = {d}: initialization needs d distinct arms"
        )));
    }
    Ok(())
}

/// Features: unit (d-1)-ball plus a bias entry of one.
fn sample_features(d: usize, k: usize, rng: &mut RngStream) -> Vec<Vector> {
    (0..k)
        .map(|_| {
            let head = sample_ball(d - 1, 1.0, rng);
            Vector::from_fn(d, |i, _| if i + 1 < d { head[i] } else { 1.0 })
        })
        .collect()
}

/// Linear instance: features from the unit (d-1)-ball with a bias of one,
/// theta from the radius-1/2 (d-1)-ball with a last entry of 1/2, so every
/// mean lies in `[0, 1]`.
pub fn gen_linear_instance(d: usize, k: usize, rng: &mut RngStream) -> Result<BanditInstance> {
    check_shape(d, k)?;
    loop {
        let features = sample_features(d, k, rng);
        let head = sample_ball(d - 1, 0.5, rng);
        let theta = Vector::from_fn(d, |i, _| if i + 1 < d { head[i] } else { 0.5 });
        // Rounding can push a mean a hair outside [0, 1] on the boundary.
        let inst = match BanditInstance::from_parts(InstanceKind::Linear, features, theta, None) {
            Ok(inst) => inst,
            Err(PheError::InvalidParameter(_)) => continue,
            Err(e) => return Err(e),
        };
        if inst.has_unique_optimum() {
            return Ok(inst);
        }
    }
}

/// Logistic instance: features as in the linear case, theta from the radius-3
/// d-ball.
pub fn gen_logistic_instance(d: usize, k: usize, rng: &mut RngStream) -> Result<BanditInstance> {
    check_shape(d, k)?;
    loop {
        let features = sample_features(d, k, rng);
        let theta = sample_ball(d, 3.0, rng);
        let inst = BanditInstance::from_parts(InstanceKind::Logistic, features, theta, None)?;
        if inst.has_unique_optimum() {
            return Ok(inst);
        }
    }
}

/// Instance `index` of an experiment seeded with `master`.
pub fn generate_instance(kind: InstanceKind, d: usize, k: usize, master: u64, index: u64) -> Result<BanditInstance> {
    let mut rng = RngStream::from_lineage(&[master, INSTANCE_DOMAIN, index]);
    let mut inst = match kind {
        InstanceKind::Linear => gen_linear_instance(d, k, &mut rng)?,
        InstanceKind::Logistic => gen_logistic_instance(d, k, &mut rng)?,
    };
    inst.seed = Some(master);
    Ok(inst)
}

/// Maps a reward in `[low, high]` to `[0, 1]`.
pub fn rescale_reward(y: f64, low: f64, high: f64) -> Result<f64> {
    if high.is_nan() || low.is_nan() || high <= low {
        return Err(PheError::InvalidParameter(format!(
            "reward range needs high > low, got [{low}, {high}]"
        )));
    }
    Ok((y - low) / (high - low))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn linear_instances_are_valid() {
        let mut rng = RngStream::new(1);
        for _ in 0..20 {
            let inst = gen_linear_instance(5, 100, &mut rng).unwrap();
            assert_eq!(inst.num_arms(), 100);
            for (x, &mu) in inst.features().iter().zip(inst.means()) {
                assert_eq!(x[4], 1.0);
                assert!((0.0..=1.0).contains(&mu));
            }
            assert!(inst.has_unique_optimum());
            assert_eq!(inst.gaps()[inst.optimal_arm()], 0.0);
            assert!(inst.gaps().iter().all(|&g| g >= 0.0));
        }
    }

    #[test]
    fn forced_linear_fixture() {
        let inst = BanditInstance::from_parts(
            InstanceKind::Linear,
            vec![v(&[1.0, 1.0]), v(&[-1.0, 1.0]), v(&[0.0, 1.0])],
            v(&[0.5, 0.5]),
            None,
        )
        .unwrap();
        assert_eq!(inst.means(), &[1.0, 0.0, 0.5]);
        assert_eq!(inst.optimal_arm(), 0);
        assert_eq!(inst.gaps(), &[0.0, 1.0, 0.5]);
    }

    #[test]
    fn logistic_instances_are_valid() {
        let mut rng = RngStream::new(2);
        for _ in 0..20 {
            let inst = gen_logistic_instance(5, 50, &mut rng).unwrap();
            assert!(inst.theta().norm() <= 3.0);
            assert!(inst.means().iter().all(|&m| m > 0.0 && m < 1.0));
            assert!(inst.features().iter().all(|x| x[4] == 1.0));
        }
    }

    #[test]
    fn logistic_zero_theta() {
        let inst = BanditInstance::from_parts(
            InstanceKind::Logistic,
            vec![v(&[1.0, 1.0]), v(&[0.3, 1.0])],
            Vector::zeros(2),
            None,
        )
        .unwrap();
        assert!(inst.means().iter().all(|&m| m == 0.5));
        assert!(!inst.has_unique_optimum());
    }

    #[test]
    fn rejects_too_few_arms() {
        let mut rng = RngStream::new(0);
        assert!(gen_linear_instance(5, 4, &mut rng).is_err());
        assert!(gen_logistic_instance(3, 2, &mut rng).is_err());
    }

    #[test]
    fn generation_is_pure() {
        let a = generate_instance(InstanceKind::Linear, 4, 10, 9, 3).unwrap();
        let b = generate_instance(InstanceKind::Linear, 4, 10, 9, 3).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(InstanceKind::Linear, 4, 10, 9, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn deterministic_rewards() {
        let inst = BanditInstance::from_parts(
            InstanceKind::Linear,
            vec![v(&[1.0, 1.0]), v(&[-1.0, 1.0])],
            v(&[0.5, 0.5]),
            None,
        )
        .unwrap();
        let mut rng = RngStream::new(3);
        for _ in 0..1000 {
            assert_eq!(inst.draw_reward(0, &mut rng).unwrap(), 1.0);
            assert_eq!(inst.draw_reward(1, &mut rng).unwrap(), 0.0);
        }
        assert!(matches!(
            inst.draw_reward(2, &mut rng),
            Err(PheError::ArmOutOfRange { arm: 2, num_arms: 2 })
        ));
    }

    #[test]
    fn bernoulli_reward_frequency() {
        let inst = BanditInstance::from_parts(
            InstanceKind::Linear,
            vec![v(&[0.0, 1.0]), v(&[1.0, 1.0])],
            v(&[0.1, 0.3]),
            None,
        )
        .unwrap();
        let mut rng = RngStream::new(4);
        let n = 100_000;
        let total: f64 = (0..n).map(|_| inst.draw_reward(0, &mut rng).unwrap()).sum();
        assert!((total / n as f64 - 0.3).abs() < 0.005);
    }

    #[test]
    fn rescale() {
        assert_eq!(rescale_reward(-1.0, -1.0, 3.0).unwrap(), 0.0);
        assert_eq!(rescale_reward(3.0, -1.0, 3.0).unwrap(), 1.0);
        assert_eq!(rescale_reward(2.0, 0.0, 4.0).unwrap(), 0.5);
        assert!(rescale_reward(1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn ball_sampling_is_uniform() {
        let mut rng = RngStream::new(5);
        let dim = 4;
        let radius = 2.0;
        let n = 100_000;
        let mut mean = Vector::zeros(dim);
        let mut inner = 0usize;
        let half_volume_radius = radius * 0.5f64.powf(1.0 / dim as f64);
        for _ in 0..n {
            let p = sample_ball(dim, radius, &mut rng);
            assert!(p.norm() <= radius);
            if p.norm() <= half_volume_radius {
                inner += 1;
            }
            mean += p;
        }
        mean /= n as f64;
        // Per-coordinate variance of a uniform ball point is r^2 / (dim + 2).
        let sd = (radius * radius / (dim as f64 + 2.0) / n as f64).sqrt();
        assert!(mean.amax() < 3.0 * sd, "mean {mean}");
        let frac = inner as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "frac {frac}");
    }

    #[test]
    fn json_round_trip() {
        let inst = generate_instance(InstanceKind::Logistic, 3, 6, 1, 0).unwrap();
        let back = BanditInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);
        let doc: serde_json::Value = serde_json::from_str(&inst.to_json().unwrap()).unwrap();
        assert_eq!(doc["K"], 6);
        assert_eq!(doc["kind"], "logistic");
    }
}
