//! Episode runner, regret accounting, and aggregation across instances.
//!
//! Regret is pseudo-regret: the true gap of every pulled arm is accumulated.
//! Rewards are drawn from a stream keyed by (instance, round, arm), so all
//! policies on an instance face common random numbers.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environments::{generate_instance, BanditInstance, InstanceKind};
use crate::error::{PheError, Result};
use crate::linalg::GramState;
use crate::policies::{default_policies, Policy, PolicyContext, PolicySpec};
use crate::rng::{stable_id, RngStream, REWARD_DOMAIN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: InstanceKind,
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub num_instances: usize,
    pub master_seed: u64,
    pub policies: Vec<PolicySpec>,
}

impl ExperimentConfig {
    /// The default comparison for `kind` at the given size.
    pub fn with_defaults(kind: InstanceKind, d: usize, k: usize, n: usize, num_instances: usize, seed: u64) -> Self {
        Self {
            kind,
            d,
            k,
            n,
            num_instances,
            master_seed: seed,
            policies: default_policies(kind),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(PheError::Config(format!("d must be at least 2, got {}", self.d)));
        }
        if self.k < self.d {
            return Err(PheError::Config(format!(
                "K = {} must be at least d = {}",
                self.k, self.d
            )));
        }
        if self.n < self.d {
            return Err(PheError::Config(format!(
                "n = {} must be at least d = {}",
                self.n, self.d
            )));
        }
        if self.num_instances == 0 {
            return Err(PheError::Config("need at least one instance".into()));
        }
        if self.policies.is_empty() {
            return Err(PheError::Config("need at least one policy".into()));
        }
        let mut seen = HashSet::new();
        for p in &self.policies {
            p.validate().map_err(|e| PheError::Config(e.to_string()))?;
            if !seen.insert(p.label()) {
                return Err(PheError::Config(format!("duplicate policy label {}", p.label())));
            }
        }
        Ok(())
    }
}

/// One policy on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_id: u64,
    pub policy: String,
    /// Arm pulled in each round.
    pub arms: Vec<usize>,
    /// Cumulative pseudo-regret after each round.
    pub cum_regret: Vec<f64>,
    /// `min(|x_{I_t}|^2_{G_t^{-1}}, 1)` for rounds `t > d`, with
    /// `G_t = lambda I + sum_{l < t} X_l X_l^T`, when width tracking is on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_lambda: Option<f64>,
}

impl RunRecord {
    pub fn horizon(&self) -> usize {
        self.cum_regret.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpisodeOptions {
    /// Track squared confidence widths with this regularizer.
    pub width_lambda: Option<f64>,
}

/// Mean regret curve with pointwise standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    pub policy: String,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub num_instances: usize,
}

impl RegretCurve {
    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn final_stderr(&self) -> f64 {
        self.stderr.last().copied().unwrap_or(0.0)
    }
}

/// Runs `policy` on `inst` for `n` rounds.
pub fn run_episode(
    inst: &BanditInstance,
    policy: &mut dyn Policy,
    n: usize,
    master_seed: u64,
    instance_id: u64,
    opts: EpisodeOptions,
) -> Result<RunRecord> {
    let d = inst.dim();
    if n < d {
        return Err(PheError::InvalidParameter(format!(
            "horizon n = {n} must be at least d = {d}"
        )));
    }
    let label = policy.label().to_string();
    let policy_id = stable_id(&label);
    let fail = |round: usize, e: PheError| PheError::Episode {
        instance: instance_id,
        policy: label.clone(),
        round,
        source: Box::new(e),
    };

    let mut width_gram = match opts.width_lambda {
        Some(l) => Some(GramState::new(d, l, 1.0)?),
        None => None,
    };
    let mut widths = width_gram.as_ref().map(|_| Vec::with_capacity(n.saturating_sub(d)));

    let mut arms = Vec::with_capacity(n);
    let mut cum_regret = Vec::with_capacity(n);
    let mut regret = 0.0;
    for t in 1..=n {
        let mut rng = RngStream::for_round(master_seed, instance_id, policy_id, t as u64);
        let arm = policy.select(t, &mut rng).map_err(|e| fail(t, e))?;
        let mut reward_rng = RngStream::from_lineage(&[master_seed, REWARD_DOMAIN, instance_id, t as u64, arm as u64]);
        let y = inst.draw_reward(arm, &mut reward_rng).map_err(|e| fail(t, e))?;
        policy.update(arm, y).map_err(|e| fail(t, e))?;

        if let (Some(g), Some(w)) = (width_gram.as_mut(), widths.as_mut()) {
            let x = &inst.features()[arm];
            if t > d {
                w.push(g.quad_norm(x).powi(2).min(1.0));
            }
            g.rank_one_update(x)?;
        }

        regret += inst.gaps()[arm];
        arms.push(arm);
        cum_regret.push(regret);
    }
    Ok(RunRecord {
        instance_id,
        policy: label,
        arms,
        cum_regret,
        widths,
        width_lambda: opts.width_lambda,
    })
}

/// Pointwise mean and standard error of one policy's runs. Values are summed
/// in sorted order, so the result does not depend on the order of `records`.
pub fn aggregate(records: &[&RunRecord]) -> Result<RegretCurve> {
    let first = records
        .first()
        .ok_or_else(|| PheError::Aggregation("no records to aggregate".into()))?;
    let n = first.horizon();
    for r in records {
        if r.horizon() != n {
            return Err(PheError::Aggregation(format!(
                "mismatched horizons {} and {}",
                n,
                r.horizon()
            )));
        }
        if r.policy != first.policy {
            return Err(PheError::Aggregation(format!(
                "records mix policies {} and {}",
                first.policy, r.policy
            )));
        }
    }
    let m = records.len() as f64;
    let mut mean = Vec::with_capacity(n);
    let mut stderr = Vec::with_capacity(n);
    let mut column = Vec::with_capacity(records.len());
    for t in 0..n {
        column.clear();
        column.extend(records.iter().map(|r| r.cum_regret[t]));
        column.sort_by(f64::total_cmp);
        let mu = column.iter().sum::<f64>() / m;
        let se = if records.len() > 1 {
            let var = column.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        } else {
            0.0
        };
        mean.push(mu);
        stderr.push(se);
    }
    Ok(RegretCurve {
        policy: first.policy.clone(),
        mean,
        stderr,
        num_instances: records.len(),
    })
}

/// Episode that ended in an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFailure {
    pub instance_id: u64,
    pub policy: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub curves: Vec<RegretCurve>,
    pub failures: Vec<EpisodeFailure>,
}

impl ExperimentOutcome {
    pub fn curve(&self, policy: &str) -> Option<&RegretCurve> {
        self.curves.iter().find(|c| c.policy == policy)
    }
}

/// Runs every policy on every instance. `jobs = 0` uses rayon's default pool.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let instances: Vec<BanditInstance> = (0..cfg.num_instances as u64)
        .map(|i| generate_instance(cfg.kind, cfg.d, cfg.k, cfg.master_seed, i))
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..cfg.policies.len()).map(move |p| (i, p)))
        .collect();
    let run_one = |&(i, p): &(usize, usize)| -> Result<RunRecord> {
        let inst = &instances[i];
        let ctx = PolicyContext::from_instance(inst, cfg.n);
        let mut policy = cfg.policies[p].build(&ctx)?;
        run_episode(
            inst,
            policy.as_mut(),
            cfg.n,
            cfg.master_seed,
            i as u64,
            EpisodeOptions::default(),
        )
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| PheError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<RunRecord>> = pool.install(|| tasks.par_iter().map(run_one).collect());

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (&(i, p), res) in tasks.iter().zip(results) {
        match res {
            Ok(r) => records.push(r),
            Err(e) => failures.push(EpisodeFailure {
                instance_id: i as u64,
                policy: cfg.policies[p].label(),
                message: e.to_string(),
            }),
        }
    }

    let mut curves = Vec::new();
    for spec in &cfg.policies {
        let label = spec.label();
        let group: Vec<&RunRecord> = records.iter().filter(|r| r.policy == label).collect();
        if !group.is_empty() {
            curves.push(aggregate(&group)?);
        }
    }
    Ok(ExperimentOutcome {
        records,
        curves,
        failures,
    })
}

fn csv_err(e: csv::Error) -> PheError {
    PheError::Format(e.to_string())
}

/// Per-run CSV: `policy,instance,round,cum_regret`, rounds divisible by `stride`.
pub fn write_runs_csv<W: Write>(records: &[RunRecord], stride: usize, out: W) -> Result<()> {
    let stride = stride.max(1);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "instance", "round", "cum_regret"])
        .map_err(csv_err)?;
    for r in records {
        for t in (stride..=r.horizon()).step_by(stride) {
            w.write_record([
                r.policy.clone(),
                r.instance_id.to_string(),
                t.to_string(),
                r.cum_regret[t - 1].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Aggregate CSV: `policy,round,mean_regret,stderr`, rounds divisible by `stride`.
pub fn write_aggregate_csv<W: Write>(curves: &[RegretCurve], stride: usize, out: W) -> Result<()> {
    let stride = stride.max(1);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "round", "mean_regret", "stderr"])
        .map_err(csv_err)?;
    for c in curves {
        for t in (stride..=c.mean.len()).step_by(stride) {
            w.write_record([
                c.policy.clone(),
                t.to_string(),
                c.mean[t - 1].to_string(),
                c.stderr[t - 1].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One logged point of an aggregate curve.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AggregateRow {
    pub policy: String,
    pub round: usize,
    pub mean_regret: f64,
    pub stderr: f64,
}

/// Reads an aggregate CSV, grouping rows by policy in first-seen order.
pub fn read_aggregate_csv<R: std::io::Read>(input: R) -> Result<Vec<(String, Vec<AggregateRow>)>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    for col in ["policy", "round", "mean_regret", "stderr"] {
        if !headers.iter().any(|h| h == col) {
            return Err(PheError::Format(format!("aggregate CSV is missing column {col}")));
        }
    }
    let mut groups: Vec<(String, Vec<AggregateRow>)> = Vec::new();
    for row in rdr.deserialize::<AggregateRow>() {
        let row = row.map_err(csv_err)?;
        match groups.iter_mut().find(|(p, _)| *p == row.policy) {
            Some((_, rows)) => rows.push(row),
            None => groups.push((row.policy.clone(), vec![row])),
        }
    }
    Ok(groups)
}
