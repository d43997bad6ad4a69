//! Python bindings: instances, policies, episodes and experiments, the
//! verification checks, and a few numerical building blocks.

use std::sync::Mutex;

use phe::environments::{BanditInstance, InstanceKind};
use phe::glm::{SolverOptions, WeightedLogit};
use phe::harness::{self, EpisodeOptions};
use phe::linalg::Vector;
use phe::perturbation;
use phe::policies::{Policy, PolicyContext, PolicySpec};
use phe::rng::{stable_id, RngStream};
use phe::verification::{self, CheckReport, FrozenHistory, Suite};
use phe::PheError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: PheError) -> PyErr {
    match e {
        PheError::InvalidParameter(_)
        | PheError::DimensionMismatch { .. }
        | PheError::ArmOutOfRange { .. }
        | PheError::InvalidReward(_)
        | PheError::Config(_)
        | PheError::Format(_)
        | PheError::Json(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_kind(kind: &str) -> PyResult<InstanceKind> {
    match kind {
        "linear" => Ok(InstanceKind::Linear),
        "logistic" => Ok(InstanceKind::Logistic),
        _ => Err(PyValueError::new_err(format!(
            "unknown kind {kind:?}, expected linear or logistic"
        ))),
    }
}

fn policy_spec(name: &str, a: Option<f64>, lam: Option<f64>, v: Option<f64>) -> PyResult<PolicySpec> {
    let mut doc = serde_json::json!({ "name": name });
    for (key, value) in [("a", a), ("lambda", lam), ("v", v)] {
        if let Some(x) = value {
            doc[key] = serde_json::json!(x);
        }
    }
    let spec: PolicySpec = serde_json::from_value(doc).map_err(|e| PyValueError::new_err(e.to_string()))?;
    spec.validate().map_err(to_py)?;
    Ok(spec)
}

fn vectors(rows: Vec<Vec<f64>>) -> Vec<Vector> {
    rows.into_iter().map(Vector::from_vec).collect()
}

fn report_dict<'py>(py: Python<'py>, r: &CheckReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("name", &r.name)?;
    d.set_item("empirical", r.empirical)?;
    d.set_item("bound", r.bound)?;
    d.set_item("num_samples", r.num_samples)?;
    d.set_item("mc_stderr", r.mc_stderr)?;
    d.set_item("pass", r.pass)?;
    d.set_item("params", r.params.clone())?;
    Ok(d)
}

/// A bandit problem: arm features, parameter, and derived means and gaps.
#[pyclass(name = "BanditInstance", module = "phe_bandit", frozen)]
struct PyInstance {
    inner: BanditInstance,
}

#[pymethods]
impl PyInstance {
    /// Instance `index` of the seeded family for `(kind, d, k, seed)`.
    #[staticmethod]
    #[pyo3(signature = (kind, d, k, seed, index = 0))]
    fn generate(kind: &str, d: usize, k: usize, seed: u64, index: u64) -> PyResult<Self> {
        let inner = phe::environments::generate_instance(parse_kind(kind)?, d, k, seed, index).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: BanditInstance::from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn num_arms(&self) -> usize {
        self.inner.num_arms()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.inner
            .features()
            .iter()
            .map(|x| x.iter().copied().collect())
            .collect()
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta().iter().copied().collect()
    }

    #[getter]
    fn means(&self) -> Vec<f64> {
        self.inner.means().to_vec()
    }

    #[getter]
    fn gaps(&self) -> Vec<f64> {
        self.inner.gaps().to_vec()
    }

    #[getter]
    fn optimal_arm(&self) -> usize {
        self.inner.optimal_arm()
    }

    /// One Bernoulli reward of `arm`, from a stream seeded by `seed`.
    fn draw_reward(&self, arm: usize, seed: u64) -> PyResult<f64> {
        self.inner.draw_reward(arm, &mut RngStream::new(seed)).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "BanditInstance(kind={}, d={}, K={}, optimal_arm={})",
            self.inner.kind(),
            self.inner.dim(),
            self.inner.num_arms(),
            self.inner.optimal_arm()
        )
    }
}

/// A policy bound to an instance's arms, driven round by round.
#[pyclass(name = "Policy", module = "phe_bandit")]
struct PyPolicy {
    inner: Mutex<Box<dyn Policy>>,
    label: String,
    seed: u64,
}

#[pymethods]
impl PyPolicy {
    /// `name` is one of linphe, logphe, linucb, lints, eps-greedy, glm-ucb, logts.
    #[new]
    #[pyo3(signature = (instance, name, horizon, a = None, lam = None, v = None, seed = 0))]
    fn new(
        instance: &PyInstance,
        name: &str,
        horizon: usize,
        a: Option<f64>,
        lam: Option<f64>,
        v: Option<f64>,
        seed: u64,
    ) -> PyResult<Self> {
        let spec = policy_spec(name, a, lam, v)?;
        let ctx = PolicyContext::from_instance(&instance.inner, horizon);
        let policy = spec.build(&ctx).map_err(to_py)?;
        Ok(Self {
            label: spec.label(),
            inner: Mutex::new(policy),
            seed,
        })
    }

    #[getter]
    fn label(&self) -> &str {
        &self.label
    }

    /// Arm to pull in round `t >= 1`.
    fn select(&self, t: usize) -> PyResult<usize> {
        let mut rng = RngStream::for_round(self.seed, 0, stable_id(&self.label), t as u64);
        self.inner.lock().unwrap().select(t, &mut rng).map_err(to_py)
    }

    fn update(&self, arm: usize, reward: f64) -> PyResult<()> {
        self.inner.lock().unwrap().update(arm, reward).map_err(to_py)
    }
}

/// Runs one policy for `n` rounds; returns `{"policy", "arms", "cum_regret"}`.
#[pyfunction]
#[pyo3(signature = (instance, name, n, seed = 0, instance_id = 0, a = None, lam = None, v = None))]
#[allow(clippy::too_many_arguments)]
fn run_episode<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    name: &str,
    n: usize,
    seed: u64,
    instance_id: u64,
    a: Option<f64>,
    lam: Option<f64>,
    v: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = policy_spec(name, a, lam, v)?;
    let inst = &instance.inner;
    let record = py
        .detach(|| {
            let mut policy = spec.build(&PolicyContext::from_instance(inst, n))?;
            harness::run_episode(inst, policy.as_mut(), n, seed, instance_id, EpisodeOptions::default())
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("policy", record.policy)?;
    d.set_item("arms", record.arms)?;
    d.set_item("cum_regret", record.cum_regret)?;
    Ok(d)
}

/// Runs an experiment from a JSON configuration (same schema as the `phe`
/// command line). Returns one `{"policy", "mean", "stderr", "num_instances"}`
/// per policy; raises if any episode failed.
#[pyfunction]
#[pyo3(signature = (config, jobs = 0))]
fn run_experiment<'py>(py: Python<'py>, config: &str, jobs: usize) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = phe::cli::CliConfig::parse(config).map_err(to_py)?;
    let exp = cfg.experiment(None).map_err(to_py)?;
    let outcome = py.detach(|| harness::run_experiment(&exp, jobs)).map_err(to_py)?;
    if let Some(f) = outcome.failures.first() {
        return Err(PyRuntimeError::new_err(format!(
            "{} episodes failed, first: instance {} policy {}: {}",
            outcome.failures.len(),
            f.instance_id,
            f.policy,
            f.message
        )));
    }
    outcome
        .curves
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("policy", &c.policy)?;
            d.set_item("mean", c.mean.clone())?;
            d.set_item("stderr", c.stderr.clone())?;
            d.set_item("num_instances", c.num_instances)?;
            Ok(d)
        })
        .collect()
}

/// Runs a verification suite: concentration, anticoncentration, width-sum,
/// variance or all.
#[pyfunction]
#[pyo3(signature = (suite, seed = 0, samples = None))]
fn verify<'py>(py: Python<'py>, suite: &str, seed: u64, samples: Option<u64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let suite: Suite = suite.parse().map_err(to_py)?;
    let reports = py
        .detach(|| verification::run_suite(suite, seed, samples))
        .map_err(to_py)?;
    reports.iter().map(|r| report_dict(py, r)).collect()
}

fn history(features: Vec<Vec<f64>>, rewards: Vec<f64>, lam: f64, a: f64) -> PyResult<FrozenHistory> {
    FrozenHistory::new(vectors(features), rewards, lam, a).map_err(to_py)
}

/// Concentration check on an explicit history.
#[pyfunction]
#[pyo3(signature = (features, rewards, lam, a, x, c, samples = 100_000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn check_concentration<'py>(
    py: Python<'py>,
    features: Vec<Vec<f64>>,
    rewards: Vec<f64>,
    lam: f64,
    a: f64,
    x: Vec<f64>,
    c: f64,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let h = history(features, rewards, lam, a)?;
    let x = Vector::from_vec(x);
    let r = py
        .detach(|| verification::check_concentration(&h, &x, c, samples, &mut RngStream::new(seed)))
        .map_err(to_py)?;
    report_dict(py, &r)
}

/// Anti-concentration check on an explicit history.
#[pyfunction]
#[pyo3(signature = (features, rewards, lam, a, x, c, n_ref, samples = 100_000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn check_anticoncentration<'py>(
    py: Python<'py>,
    features: Vec<Vec<f64>>,
    rewards: Vec<f64>,
    lam: f64,
    a: f64,
    x: Vec<f64>,
    c: f64,
    n_ref: u64,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let h = history(features, rewards, lam, a)?;
    let x = Vector::from_vec(x);
    let r = py
        .detach(|| verification::check_anticoncentration(&h, &x, c, n_ref, samples, &mut RngStream::new(seed)))
        .map_err(to_py)?;
    report_dict(py, &r)
}

/// `theta_bar` of an explicit history.
#[pyfunction]
fn theta_bar(features: Vec<Vec<f64>>, rewards: Vec<f64>, lam: f64, a: f64) -> PyResult<Vec<f64>> {
    let h = history(features, rewards, lam, a)?;
    Ok(verification::compute_theta_bar(&h)
        .map_err(to_py)?
        .iter()
        .copied()
        .collect())
}

/// `size` draws from `B(n, 1/2)`.
#[pyfunction]
#[pyo3(signature = (n, seed = 0, size = 1))]
fn sample_binomial(n: u64, seed: u64, size: usize) -> Vec<u64> {
    let mut rng = RngStream::new(seed);
    (0..size).map(|_| perturbation::sample_binomial(n, &mut rng)).collect()
}

/// Regularized logistic fit over grouped rows `(x, ones, total)`.
#[pyfunction]
#[pyo3(signature = (xs, ones, totals, lam, tol = 1e-8, max_iter = 100))]
fn fit_logistic(
    xs: Vec<Vec<f64>>,
    ones: Vec<f64>,
    totals: Vec<f64>,
    lam: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<Vec<f64>> {
    if xs.is_empty() || xs.len() != ones.len() || xs.len() != totals.len() {
        return Err(PyValueError::new_err(
            "xs, ones and totals must be non-empty and of equal length",
        ));
    }
    let mut prob = WeightedLogit::new(xs[0].len(), lam).map_err(to_py)?;
    for ((x, o), t) in vectors(xs).into_iter().zip(ones).zip(totals) {
        prob.push(x, o, t).map_err(to_py)?;
    }
    let res = prob.fit(SolverOptions { tol, max_iter });
    if !res.converged {
        return Err(to_py(PheError::SolverDiverged {
            iterations: res.iterations,
            grad_norm: res.grad_norm,
        }));
    }
    Ok(res.theta.iter().copied().collect())
}

#[pymodule]
fn phe_bandit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyPolicy>()?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(check_concentration, m)?)?;
    m.add_function(wrap_pyfunction!(check_anticoncentration, m)?)?;
    m.add_function(wrap_pyfunction!(theta_bar, m)?)?;
    m.add_function(wrap_pyfunction!(sample_binomial, m)?)?;
    m.add_function(wrap_pyfunction!(fit_logistic, m)?)?;
    Ok(())
}
