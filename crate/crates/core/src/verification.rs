//! Monte-Carlo checks of the probabilistic inequalities behind the LinPHE
//! regret analysis, evaluated on frozen histories.
//!
//! The checks use the unscaled Gram matrix `G = lambda I + sum_l X_l X_l^T`.
//! Given a history, the only randomness left in `theta_tilde` is the
//! pseudo-rewards, and
//!
//! ```text
//! x' theta_tilde - x' theta_bar = sum_l (x' G^{-1} X_l) (S_l - a / 2),   S_l ~ B(a, 1/2)
//! ```
//!
//! Pulls that share a feature vector share a weight, so a resample costs one
//! binomial draw per distinct arm.
//!
//! Each report passes when its inequality holds with a slack of three Monte
//! Carlo standard errors.

use std::collections::BTreeMap;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::environments::{generate_instance, BanditInstance, InstanceKind};
use crate::error::{PheError, Result};
use crate::harness::{run_episode, EpisodeOptions, RunRecord};
use crate::linalg::{min_eigenvalue, GramState, Matrix, Vector};
use crate::perturbation::sample_binomial;
use crate::policies::{initial_arm, PolicyContext, PolicyName, PolicySpec};
use crate::rng::{RngStream, REWARD_DOMAIN, VERIFY_DOMAIN};

/// Monte Carlo slack, in standard errors.
pub const MC_SLACK: f64 = 3.0;

/// Pulled features and rewards up to some round, held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenHistory {
    features: Vec<Vector>,
    rewards: Vec<f64>,
    means: Option<Vec<f64>>,
    lambda: f64,
    a: f64,
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub empirical: f64,
    pub bound: f64,
    pub num_samples: u64,
    pub mc_stderr: f64,
    pub pass: bool,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl CheckReport {
    fn new(name: &str, empirical: f64, bound: f64, num_samples: u64, mc_stderr: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            empirical,
            bound,
            num_samples,
            mc_stderr,
            pass,
            params: BTreeMap::new(),
        }
    }

    fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }
}

impl FrozenHistory {
    /// Requires at least `d` pulls, with the first `d` spanning `R^d`.
    pub fn new(features: Vec<Vector>, rewards: Vec<f64>, lambda: f64, a: f64) -> Result<Self> {
        let d = features.first().map_or(0, |x| x.len());
        if d == 0 {
            return Err(PheError::InvalidParameter("history is empty".into()));
        }
        if features.len() != rewards.len() {
            return Err(PheError::DimensionMismatch {
                expected: features.len(),
                got: rewards.len(),
            });
        }
        if let Some(x) = features.iter().find(|x| x.len() != d) {
            return Err(PheError::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        if features.len() < d {
            return Err(PheError::InvalidParameter(format!(
                "history has {} pulls, needs at least d = {d}",
                features.len()
            )));
        }
        if let Some(y) = rewards.iter().find(|y| !(0.0..=1.0).contains(*y)) {
            return Err(PheError::InvalidReward(*y));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(PheError::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(PheError::InvalidParameter(format!("a must be >= 0, got {a}")));
        }
        let h = Self {
            features,
            rewards,
            means: None,
            lambda,
            a,
        };
        if h.initial_span_eigenvalue() <= 1e-12 {
            return Err(PheError::InvalidParameter("first d pulls do not span R^d".into()));
        }
        Ok(h)
    }

    /// Attaches the true mean reward of every pull (needed for the variance check).
    pub fn with_means(mut self, means: Vec<f64>) -> Result<Self> {
        if means.len() != self.rewards.len() {
            return Err(PheError::DimensionMismatch {
                expected: self.rewards.len(),
                got: means.len(),
            });
        }
        if let Some(m) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(PheError::InvalidParameter(format!("mean {m} outside [0, 1]")));
        }
        self.means = Some(means);
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(PheError::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_a(mut self, a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(PheError::InvalidParameter(format!("a must be >= 0, got {a}")));
        }
        self.a = a;
        Ok(self)
    }

    /// History of `rounds` pulls on `inst`: the initialization arms first, then
    /// uniformly random arms, with Bernoulli rewards.
    pub fn simulate(inst: &BanditInstance, rounds: usize, lambda: f64, a: f64, rng: &mut RngStream) -> Result<Self> {
        let d = inst.dim();
        let k = inst.num_arms();
        let mut features = Vec::with_capacity(rounds);
        let mut rewards = Vec::with_capacity(rounds);
        let mut means = Vec::with_capacity(rounds);
        for t in 1..=rounds {
            let arm = initial_arm(t, d, k).unwrap_or_else(|| rng.index(k));
            features.push(inst.features()[arm].clone());
            rewards.push(inst.draw_reward(arm, rng)?);
            means.push(inst.means()[arm]);
        }
        Self::new(features, rewards, lambda, a)?.with_means(means)
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Vector] {
        &self.features
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn means(&self) -> Option<&[f64]> {
        self.means.as_deref()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `lambda_min(sum_{l <= d} X_l X_l^T)`.
    fn initial_span_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let mut m = Matrix::zeros(d, d);
        for x in &self.features[..d] {
            m.ger(1.0, x, x, 1.0);
        }
        min_eigenvalue(&m)
    }

    /// `lambda_min(G_{d+1})`, the Gram matrix after the initialization pulls.
    pub fn initial_gram_min_eigenvalue(&self) -> f64 {
        self.initial_span_eigenvalue() + self.lambda
    }

    /// The regularizer solving `lambda = lambda_min(G_{d+1}) / 4`, where
    /// `G_{d+1}` itself contains `lambda I`: `lambda_min(sum_{l <= d} X_l X_l^T) / 3`.
    pub fn self_consistent_lambda(&self) -> f64 {
        self.initial_span_eigenvalue() / 3.0
    }

    /// `G = lambda I + sum_l X_l X_l^T`.
    pub fn gram(&self) -> Result<GramState> {
        let mut g = GramState::new(self.dim(), self.lambda, 1.0)?;
        for x in &self.features {
            g.rank_one_update(x)?;
        }
        g.refresh()?;
        Ok(g)
    }

    fn integral_a(&self) -> Result<u64> {
        if self.a.fract() != 0.0 || self.a < 1.0 {
            return Err(PheError::InvalidParameter(format!(
                "resampling checks need an integral a >= 1, got {}",
                self.a
            )));
        }
        Ok(self.a as u64)
    }

    /// One draw of `theta_tilde` with fresh pseudo-rewards.
    pub fn sample_theta_tilde(&self, rng: &mut RngStream) -> Result<Vector> {
        let a = self.integral_a()?;
        let g = self.gram()?;
        let mut b = Vector::zeros(self.dim());
        for (x, y) in self.features.iter().zip(&self.rewards) {
            b.axpy(y + sample_binomial(a, rng) as f64, x, 1.0);
        }
        Ok(g.solve(&b))
    }
}

/// `theta_bar = G^{-1} sum_l X_l (Y_l + a / 2)`: pseudo-rewards at their mean.
pub fn compute_theta_bar(h: &FrozenHistory) -> Result<Vector> {
    let g = h.gram()?;
    let mut b = Vector::zeros(h.dim());
    for (x, y) in h.features.iter().zip(&h.rewards) {
        b.axpy(y + h.a / 2.0, x, 1.0);
    }
    Ok(g.solve(&b))
}

/// Samples `D = x' theta_tilde - x' theta_bar` for a fixed history and direction.
#[derive(Debug, Clone)]
pub struct DeviationSampler {
    /// (weight `x' G^{-1} X`, pseudo-reward count) per distinct feature vector.
    groups: Vec<(f64, u64)>,
    /// `|x|_{G^{-1}}`.
    x_norm: f64,
}

impl DeviationSampler {
    pub fn new(h: &FrozenHistory, x: &Vector) -> Result<Self> {
        let a = h.integral_a()?;
        Self::with_counts(h, x, |pulls| a * pulls)
    }

    fn with_counts(h: &FrozenHistory, x: &Vector, count: impl Fn(u64) -> u64) -> Result<Self> {
        if x.len() != h.dim() {
            return Err(PheError::DimensionMismatch {
                expected: h.dim(),
                got: x.len(),
            });
        }
        if x.iter().all(|&v| v == 0.0) {
            return Err(PheError::InvalidParameter("direction x must be non-zero".into()));
        }
        let g = h.gram()?;
        let gx = g.solve(x);
        let mut distinct: Vec<(&Vector, u64)> = Vec::new();
        for f in &h.features {
            match distinct.iter_mut().find(|(v, _)| *v == f) {
                Some((_, c)) => *c += 1,
                None => distinct.push((f, 1)),
            }
        }
        Ok(Self {
            groups: distinct.into_iter().map(|(f, c)| (gx.dot(f), count(c))).collect(),
            x_norm: g.quad_norm(x),
        })
    }

    pub fn x_norm(&self) -> f64 {
        self.x_norm
    }

    /// Exact variance `sum_g w_g^2 m_g / 4`.
    pub fn variance(&self) -> f64 {
        self.groups.iter().map(|(w, m)| w * w * *m as f64 / 4.0).sum()
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.groups
            .iter()
            .map(|&(w, m)| w * (sample_binomial(m, rng) as f64 - m as f64 / 2.0))
            .sum()
    }
}

fn proportion_stderr(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn check_samples(samples: u64) -> Result<()> {
    if samples == 0 {
        return Err(PheError::InvalidParameter("need at least one sample".into()));
    }
    Ok(())
}

/// Concentration: `P(|D| >= c |x|_{G^{-1}}) <= 2 exp(-2 c^2 / a)`.
pub fn check_concentration(
    h: &FrozenHistory,
    x: &Vector,
    c: f64,
    samples: u64,
    rng: &mut RngStream,
) -> Result<CheckReport> {
    if c.is_nan() || c <= 0.0 {
        return Err(PheError::InvalidParameter(format!("c must be positive, got {c}")));
    }
    check_samples(samples)?;
    let sampler = DeviationSampler::new(h, x)?;
    let threshold = c * sampler.x_norm();
    let hits = (0..samples).filter(|_| sampler.sample(rng).abs() >= threshold).count() as u64;
    let freq = hits as f64 / samples as f64;
    let bound = 2.0 * (-2.0 * c * c / h.a).exp();
    let se = proportion_stderr(freq, samples);
    Ok(
        CheckReport::new("concentration", freq, bound, samples, se, freq <= bound + MC_SLACK * se)
            .param("a", h.a)
            .param("c", c)
            .param("lambda", h.lambda)
            .param("x_norm", sampler.x_norm()),
    )
}

/// Lower bound on `P(D > c |x|_{G^{-1}})`:
/// `(1 - lambda / lambda_min(G_{d+1}) - 4 c^2 / a - 8 a / n^3) / (16 log n)`.
pub fn anticoncentration_bound(h: &FrozenHistory, c: f64, n_ref: u64) -> f64 {
    let n = n_ref as f64;
    let a = h.a;
    (1.0 - h.lambda / h.initial_gram_min_eigenvalue() - 4.0 * c * c / a - 8.0 * a / n.powi(3)) / (16.0 * n.ln())
}

/// Anti-concentration: empirical optimism frequency against its lower bound.
pub fn check_anticoncentration(
    h: &FrozenHistory,
    x: &Vector,
    c: f64,
    n_ref: u64,
    samples: u64,
    rng: &mut RngStream,
) -> Result<CheckReport> {
    if !(c > 0.0 && n_ref >= 2 && 2.0 * h.a * (n_ref as f64).ln() > c * c) {
        return Err(PheError::InvalidParameter(format!(
            "need 2 a log n > c^2 > 0, got a = {}, n = {n_ref}, c = {c}",
            h.a
        )));
    }
    check_samples(samples)?;
    let sampler = DeviationSampler::new(h, x)?;
    let threshold = c * sampler.x_norm();
    let hits = (0..samples).filter(|_| sampler.sample(rng) > threshold).count() as u64;
    let freq = hits as f64 / samples as f64;
    let bound = anticoncentration_bound(h, c, n_ref);
    let se = proportion_stderr(freq, samples);
    Ok(CheckReport::new(
        "anticoncentration",
        freq,
        bound,
        samples,
        se,
        freq >= bound.max(0.0) - MC_SLACK * se,
    )
    .param("a", h.a)
    .param("c", c)
    .param("n_ref", n_ref as f64)
    .param("lambda", h.lambda)
    .param("lambda_min_initial", h.initial_gram_min_eigenvalue()))
}

/// Symmetry of `D`: `P(D > eps) = P(|D| > eps) / 2`, with `eps = c |x|_{G^{-1}}`.
/// `empirical` is the difference of the two sides.
pub fn check_symmetry(h: &FrozenHistory, x: &Vector, c: f64, samples: u64, rng: &mut RngStream) -> Result<CheckReport> {
    check_samples(samples)?;
    let sampler = DeviationSampler::new(h, x)?;
    let eps = c * sampler.x_norm();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let dev = sampler.sample(rng);
        let z = f64::from(u8::from(dev > eps)) - 0.5 * f64::from(u8::from(dev.abs() > eps));
        sum += z;
        sum_sq += z * z;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let se = (var / n).sqrt();
    Ok(
        CheckReport::new("symmetry", mean, 0.0, samples, se, mean.abs() <= MC_SLACK * se)
            .param("a", h.a)
            .param("c", c),
    )
}

/// Sum of squared confidence widths along a run with stored widths, against
/// `2 d log(1 + n L^2 / (d lambda))`. Deterministic.
pub fn check_width_sum(run: &RunRecord, inst: &BanditInstance) -> Result<CheckReport> {
    let widths = run
        .widths
        .as_ref()
        .ok_or_else(|| PheError::InvalidParameter("run has no stored widths".into()))?;
    let lambda = run
        .width_lambda
        .ok_or_else(|| PheError::InvalidParameter("run has no width regularizer".into()))?;
    Ok(width_sum_report(
        widths,
        inst.dim(),
        run.horizon(),
        inst.max_feature_norm(),
        lambda,
    ))
}

/// Width-sum inequality for explicit widths.
pub fn width_sum_report(widths: &[f64], d: usize, n: usize, feature_norm: f64, lambda: f64) -> CheckReport {
    let total: f64 = widths.iter().sum();
    let df = d as f64;
    let bound = 2.0 * df * (1.0 + n as f64 * feature_norm * feature_norm / (df * lambda)).ln();
    CheckReport::new("width-sum", total, bound, widths.len() as u64, 0.0, total <= bound)
        .param("d", df)
        .param("n", n as f64)
        .param("L", feature_norm)
        .param("lambda", lambda)
}

/// Variance and standard error of the sample variance.
fn variance_with_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    (var, ((m4 - m2 * m2).max(0.0) / n).sqrt())
}

/// Pseudo-reward deviation variance against reward-noise deviation variance,
/// both along `x`. The pseudo-reward side resamples `B(a, 1/2)` per pull; the
/// reward side resamples `Ber(mu_l)` per pull on the same arm sequence.
/// `empirical` is the pseudo-reward variance and `bound` the reward one.
pub fn check_variance_dominance(
    h: &FrozenHistory,
    x: &Vector,
    samples: u64,
    rng: &mut RngStream,
) -> Result<CheckReport> {
    if samples < 2 {
        return Err(PheError::InvalidParameter("need at least two samples".into()));
    }
    let means = h
        .means
        .as_ref()
        .ok_or_else(|| PheError::InvalidParameter("history has no per-pull means".into()))?;
    let pseudo = DeviationSampler::new(h, x)?;

    let g = h.gram()?;
    let gx = g.solve(x);
    let mut noise_groups: Vec<(&Vector, f64, u64)> = Vec::new();
    for (f, &mu) in h.features.iter().zip(means) {
        match noise_groups.iter_mut().find(|(v, m, _)| *v == f && *m == mu) {
            Some((_, _, c)) => *c += 1,
            None => noise_groups.push((f, mu, 1)),
        }
    }
    let noise: Vec<(f64, f64, Binomial)> = noise_groups
        .into_iter()
        .map(|(f, mu, c)| {
            let dist = Binomial::new(c, mu).map_err(|e| PheError::InvalidParameter(e.to_string()))?;
            Ok((gx.dot(f), mu * c as f64, dist))
        })
        .collect::<Result<_>>()?;

    let pseudo_draws: Vec<f64> = (0..samples).map(|_| pseudo.sample(rng)).collect();
    let noise_draws: Vec<f64> = (0..samples)
        .map(|_| noise.iter().map(|(w, m, dist)| w * (dist.sample(rng) as f64 - m)).sum())
        .collect();
    let (var_p, se_p) = variance_with_stderr(&pseudo_draws);
    let (var_r, se_r) = variance_with_stderr(&noise_draws);
    let se = (se_p * se_p + se_r * se_r).sqrt();
    Ok(CheckReport::new(
        "variance-dominance",
        var_p,
        var_r,
        samples,
        se,
        var_p >= var_r - MC_SLACK * se,
    )
    .param("a", h.a)
    .param("exact_pseudo_variance", pseudo.variance()))
}

/// Unit vector with a uniformly random direction.
pub fn random_direction(d: usize, rng: &mut RngStream) -> Vector {
    loop {
        let v = Vector::from_fn(d, |_, _| rng.normal());
        let n = v.norm();
        if n > 0.0 {
            return v / n;
        }
    }
}

/// Frozen history of `rounds` pulls on a fresh `d`-dimensional linear
/// instance with `k` arms.
pub fn fixture_history(d: usize, k: usize, rounds: usize, lambda: f64, a: f64, seed: u64) -> Result<FrozenHistory> {
    let inst = generate_instance(InstanceKind::Linear, d, k, seed, VERIFY_DOMAIN)?;
    let mut rng = RngStream::from_lineage(&[seed, VERIFY_DOMAIN, REWARD_DOMAIN]);
    FrozenHistory::simulate(&inst, rounds, lambda, a, &mut rng)
}

/// Named groups of checks run on generated fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Concentration,
    Anticoncentration,
    WidthSum,
    Variance,
    All,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Concentration => "concentration",
            Suite::Anticoncentration => "anticoncentration",
            Suite::WidthSum => "width-sum",
            Suite::Variance => "variance",
            Suite::All => "all",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = PheError;

    fn from_str(s: &str) -> Result<Self> {
        [
            Suite::Concentration,
            Suite::Anticoncentration,
            Suite::WidthSum,
            Suite::Variance,
            Suite::All,
        ]
        .into_iter()
        .find(|suite| suite.as_str() == s)
        .ok_or_else(|| PheError::Config(format!("unknown suite {s}")))
    }
}

/// Fixture sizes shared by the resampling suites.
const FIXTURE_DIM: usize = 3;
const FIXTURE_ARMS: usize = 10;
const FIXTURE_ROUNDS: usize = 50;
const DIRECTIONS: usize = 5;
const ANTI_HORIZON: u64 = 1000;

fn directions(seed: u64, tag: u64) -> Vec<Vector> {
    let mut rng = RngStream::from_lineage(&[seed, VERIFY_DOMAIN, tag]);
    (0..DIRECTIONS)
        .map(|_| random_direction(FIXTURE_DIM, &mut rng))
        .collect()
}

fn base_fixture(a: f64, seed: u64) -> Result<FrozenHistory> {
    fixture_history(FIXTURE_DIM, FIXTURE_ARMS, FIXTURE_ROUNDS, 1.0, a, seed)
}

/// `|D|` tails for `a` in {1, 2}, `c` in {0.5, 1, 2}, five directions.
pub fn concentration_suite(seed: u64, samples: u64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for a in [1.0, 2.0] {
        let h = base_fixture(a, seed)?;
        let mut rng = RngStream::from_lineage(&[seed, VERIFY_DOMAIN, 1, a as u64]);
        for x in directions(seed, 1) {
            for c in [0.5, 1.0, 2.0] {
                out.push(check_concentration(&h, &x, c, samples, &mut rng)?);
            }
        }
    }
    Ok(out)
}

/// Optimism frequency and symmetry with `lambda` solving
/// `lambda = lambda_min(G_{d+1}) / 4` and `a = ceil(16 c^2)`, for `c` in {1, 2},
/// plus a parameterization whose lower bound is vacuous.
pub fn anticoncentration_suite(seed: u64, samples: u64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let base = base_fixture(1.0, seed)?;
    let lambda = base.self_consistent_lambda();
    let dirs = directions(seed, 2);
    for c in [1.0f64, 2.0] {
        let a = (16.0 * c * c).ceil();
        let h = base.clone().with_lambda(lambda)?.with_a(a)?;
        let mut rng = RngStream::from_lineage(&[seed, VERIFY_DOMAIN, 2, a as u64]);
        for x in &dirs {
            out.push(check_anticoncentration(&h, x, c, ANTI_HORIZON, samples, &mut rng)?);
            out.push(check_symmetry(&h, x, c, samples, &mut rng)?);
        }
    }
    let mut rng = RngStream::from_lineage(&[seed, VERIFY_DOMAIN, 2, 0]);
    for x in &dirs {
        out.push(check_anticoncentration(&base, x, 0.9, ANTI_HORIZON, samples, &mut rng)?);
    }
    Ok(out)
}

/// Width sums along ten `LinPhe(a = 1)` runs with `d = 5`, `K = 100`, `n = 2000`.
pub fn width_sum_suite(seed: u64) -> Result<Vec<CheckReport>> {
    let lambda = 1.0;
    let n = 2000;
    let spec = PolicySpec::new(PolicyName::Linphe).with_a(1.0).with_lambda(lambda);
    (0..10)
        .map(|i| {
            let inst = generate_instance(InstanceKind::Linear, 5, 100, seed, i)?;
            let mut policy = spec.build(&PolicyContext::from_instance(&inst, n))?;
            let opts = EpisodeOptions {
                width_lambda: Some(lambda),
            };
            let run = run_episode(&inst, policy.as_mut(), n, seed, i, opts)?;
            Ok(check_width_sum(&run, &inst)?.param("instance", i as f64))
        })
        .collect()
}

/// Variance dominance for `a` in {1, 2}, five directions.
pub fn variance_suite(seed: u64, samples: u64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for a in [1.0, 2.0] {
        let h = base_fixture(a, seed)?;
        let mut rng = RngStream::from_lineage(&[seed, VERIFY_DOMAIN, 4, a as u64]);
        for x in directions(seed, 4) {
            out.push(check_variance_dominance(&h, &x, samples, &mut rng)?);
        }
    }
    Ok(out)
}

/// Default Monte Carlo sample count of each suite.
pub fn default_samples(suite: Suite) -> u64 {
    match suite {
        Suite::Variance => 100_000,
        _ => 1_000_000,
    }
}

/// Runs a suite; `samples` overrides the per-suite default.
pub fn run_suite(suite: Suite, seed: u64, samples: Option<u64>) -> Result<Vec<CheckReport>> {
    let n = |s: Suite| samples.unwrap_or_else(|| default_samples(s));
    match suite {
        Suite::Concentration => concentration_suite(seed, n(suite)),
        Suite::Anticoncentration => anticoncentration_suite(seed, n(suite)),
        Suite::WidthSum => width_sum_suite(seed),
        Suite::Variance => variance_suite(seed, n(suite)),
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Concentration,
                Suite::Anticoncentration,
                Suite::WidthSum,
                Suite::Variance,
            ] {
                out.extend(run_suite(s, seed, samples)?);
            }
            Ok(out)
        }
    }
}
