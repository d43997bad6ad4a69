//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each, and
//! exits nonzero if any fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use phe::environments::InstanceKind;
use phe::glm::{SolverOptions, WeightedLogit};
use phe::harness::{run_experiment, ExperimentConfig, RegretCurve};
use phe::linalg::GramState;
use phe::perturbation::PerturbationConfig;
use phe::policies::{LinPhe, Policy, PolicyContext};
use phe::rng::RngStream;
use phe::verification::{
    anticoncentration_suite, check_anticoncentration, check_concentration, concentration_suite, width_sum_suite,
    CheckReport, FrozenHistory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn summarize(reports: &[CheckReport]) -> Outcome {
    let failed: Vec<&CheckReport> = reports.iter().filter(|r| !r.pass).collect();
    let detail = match failed.first() {
        None => format!("{} checks passed", reports.len()),
        Some(r) => format!(
            "{}/{} checks failed, first: {} empirical {:.6} bound {:.6} se {:.2e}",
            failed.len(),
            reports.len(),
            r.name,
            r.empirical,
            r.bound,
            r.mc_stderr
        ),
    };
    outcome(failed.is_empty(), detail)
}

fn curve<'a>(curves: &'a [RegretCurve], label: &str) -> &'a RegretCurve {
    curves
        .iter()
        .find(|c| c.policy == label)
        .unwrap_or_else(|| panic!("no curve {label}"))
}

/// `lo` beats `hi` by more than two combined standard errors.
fn beats(lo: &RegretCurve, hi: &RegretCurve) -> bool {
    let se = (lo.final_stderr().powi(2) + hi.final_stderr().powi(2)).sqrt();
    hi.final_mean() - lo.final_mean() > 2.0 * se
}

fn describe(curves: &[RegretCurve]) -> String {
    curves
        .iter()
        .map(|c| format!("{} {:.1}±{:.1}", c.policy, c.final_mean(), c.final_stderr()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn linear_ordering() -> Outcome {
    let cfg = ExperimentConfig::with_defaults(InstanceKind::Linear, 5, 100, 5000, 20, SEED);
    let out = run_experiment(&cfg, 0).expect("experiment");
    let c = &out.curves;
    let ucb = curve(c, "linucb");
    let ts = curve(c, "lints(v=1)");
    let phe: Vec<&RegretCurve> = ["linphe(a=0.5)", "linphe(a=1)", "linphe(a=2)"]
        .iter()
        .map(|l| curve(c, l))
        .collect();
    let pass = out.failures.is_empty()
        && phe.iter().all(|p| p.final_mean() < ucb.final_mean() && beats(p, ucb))
        && phe[0].final_mean() <= ts.final_mean();
    outcome(pass, describe(c))
}

fn logistic_ordering() -> Outcome {
    let cfg = ExperimentConfig::with_defaults(InstanceKind::Logistic, 5, 100, 3000, 20, SEED);
    let out = run_experiment(&cfg, 0).expect("experiment");
    let c = &out.curves;
    let phe = curve(c, "logphe(a=0.5)");
    let eps = curve(c, "eps-greedy");
    let glm = curve(c, "glm-ucb");
    let glm_worst = c
        .iter()
        .filter(|o| o.policy != glm.policy)
        .all(|o| glm.final_mean() > o.final_mean() && beats(o, glm));
    let pass = out.failures.is_empty() && phe.final_mean() < eps.final_mean() && beats(phe, eps) && glm_worst;
    outcome(pass, describe(c))
}

fn random_vector(d: usize, rng: &mut ChaCha20Rng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))
}

/// Grouped per-arm estimate against the per-round sum with the same
/// pseudo-reward draws, on 100 random histories.
fn grouped_equals_naive() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(2..=5);
        let k = rng.random_range(d..=2 * d + 4);
        let a: usize = rng.random_range(1..=4);
        let lambda = rng.random_range(0.05..3.0);
        let rounds = rng.random_range(1..=40);
        let features: Vec<DVector<f64>> = (0..k).map(|_| random_vector(d, &mut rng) / (d as f64).sqrt()).collect();
        let ctx = PolicyContext {
            kind: InstanceKind::Linear,
            features: features.clone(),
            horizon: rounds,
            theta_norm: 1.0,
        };
        let mut policy = LinPhe::new(&ctx, PerturbationConfig::new(a as f64).unwrap(), lambda).unwrap();

        let scale = (a + 1) as f64;
        let mut g = DMatrix::<f64>::identity(d, d) * (scale * lambda);
        let mut b = DVector::<f64>::zeros(d);
        let mut sums = vec![0.0; k];
        for _ in 0..rounds {
            let arm = rng.random_range(0..k);
            let y = f64::from(u8::from(rng.random_bool(0.5)));
            let z: f64 = (0..a).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).sum();
            policy.update(arm, y).unwrap();
            sums[arm] += z;
            let x = &features[arm];
            g += x * x.transpose() * scale;
            b += x * (y + z);
        }
        let naive = g.lu().solve(&b).unwrap();
        worst = worst.max((policy.estimate_with_pseudo_sums(&sums) - naive).amax());
    }
    outcome(worst <= 1e-10, format!("max abs difference {worst:.2e}"))
}

fn sherman_morrison() -> Outcome {
    let d = 10;
    let mut worst = 0.0f64;
    // Default periodic refresh, and pure rank-one updates throughout.
    for period in [None, Some(usize::MAX)] {
        let mut rng = ChaCha20Rng::seed_from_u64(SEED + 7);
        let mut state = GramState::new(d, 1.0, 1.0).unwrap();
        if let Some(p) = period {
            state = state.with_refresh_period(p);
        }
        let mut direct = DMatrix::<f64>::identity(d, d);
        for _ in 0..1000 {
            let x = random_vector(d, &mut rng) / (d as f64).sqrt();
            state.rank_one_update(&x).unwrap();
            direct += &x * x.transpose();
        }
        let inv = direct.try_inverse().unwrap();
        worst = worst.max((state.inverse() - inv).amax());
    }
    outcome(worst <= 1e-8, format!("max abs difference {worst:.2e}"))
}

fn random_logit(rng: &mut ChaCha20Rng) -> WeightedLogit {
    let d = rng.random_range(2..=6);
    let mut prob = WeightedLogit::new(d, rng.random_range(0.01..2.0)).unwrap();
    for _ in 0..rng.random_range(3..15) {
        let total = rng.random_range(1..30) as f64;
        let ones = rng.random_range(0.0..=total);
        prob.push(random_vector(d, rng), ones, total).unwrap();
    }
    prob
}

fn logistic_solver() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(SEED + 8);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let prob = random_logit(&mut rng);
        let theta = random_vector(prob.dim(), &mut rng);
        let grad = prob.gradient(&theta);
        let fd = DVector::from_fn(prob.dim(), |i, _| {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[i] += h;
            down[i] -= h;
            (prob.objective(&up) - prob.objective(&down)) / (2.0 * h)
        });
        worst = worst.max((&grad - fd).norm() / grad.norm().max(1e-12));
    }
    let single = WeightedLogit::new(1, 1e-8)
        .unwrap()
        .with_row(DVector::from_element(1, 1.0), 9.0, 10.0)
        .unwrap();
    let fit = single.fit(SolverOptions::default());
    let logit_err = (fit.theta[0] - 9f64.ln()).abs();
    outcome(
        worst < 1e-5 && fit.converged && logit_err <= 1e-4,
        format!("worst relative gradient error {worst:.2e}, |x'theta - ln 9| = {logit_err:.2e}"),
    )
}

/// Exact tail probabilities of `D = sum_l w_l (S_l - a / 2)` by enumerating
/// every pseudo-reward outcome: `(P(|D| >= t), P(D > t))`.
fn enumerate_tails(weights: &[f64], a: usize, threshold: f64) -> (f64, f64) {
    let bits: Vec<f64> = weights.iter().flat_map(|&w| std::iter::repeat_n(w, a)).collect();
    let m = bits.len();
    assert!(m <= 20);
    let offset: f64 = weights.iter().map(|w| w * a as f64 / 2.0).sum();
    let (mut abs_hits, mut upper_hits) = (0u64, 0u64);
    for mask in 0u32..(1 << m) {
        let dev: f64 = bits
            .iter()
            .enumerate()
            .filter(|(j, _)| mask >> j & 1 == 1)
            .map(|(_, w)| w)
            .sum::<f64>()
            - offset;
        abs_hits += u64::from(dev.abs() >= threshold);
        upper_hits += u64::from(dev > threshold);
    }
    let total = (1u64 << m) as f64;
    (abs_hits as f64 / total, upper_hits as f64 / total)
}

fn within(mc: f64, exact: f64, samples: u64) -> bool {
    let sigma = (exact * (1.0 - exact) / samples as f64).sqrt();
    (mc - exact).abs() <= 3.0 * sigma
}

fn enumeration_oracle() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(SEED + 9);
    let samples = 200_000;
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for (d, pulls, a) in [(2usize, 10usize, 2usize), (3, 20, 1), (2, 5, 4)] {
        let features: Vec<DVector<f64>> = (0..pulls)
            .map(|_| random_vector(d, &mut rng) / (d as f64).sqrt())
            .collect();
        let rewards: Vec<f64> = (0..pulls).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
        let lambda = 1.0;
        let h = FrozenHistory::new(features.clone(), rewards, lambda, a as f64).unwrap();

        let mut g = DMatrix::<f64>::identity(d, d) * lambda;
        for x in &features {
            g += x * x.transpose();
        }
        let g_inv = g.try_inverse().unwrap();
        for _ in 0..2 {
            let x = random_vector(d, &mut rng);
            let norm = (x.transpose() * &g_inv * &x)[0].sqrt();
            let weights: Vec<f64> = features.iter().map(|f| (x.transpose() * &g_inv * f)[0]).collect();
            for c in [0.3, 0.7, 1.1] {
                let (p_abs, p_upper) = enumerate_tails(&weights, a, c * norm);
                let mut stream = RngStream::new(compared);
                let conc = check_concentration(&h, &x, c, samples, &mut stream).unwrap();
                let n_ref = 1000;
                let anti = (2.0 * a as f64 * (n_ref as f64).ln() > c * c)
                    .then(|| check_anticoncentration(&h, &x, c, n_ref, samples, &mut stream).unwrap());
                compared += 1;
                if !within(conc.empirical, p_abs, samples) {
                    mismatches.push(format!(
                        "|D| tail d={d} a={a} c={c}: mc {} exact {p_abs}",
                        conc.empirical
                    ));
                }
                if let Some(r) = anti {
                    if !within(r.empirical, p_upper, samples) {
                        mismatches.push(format!("D tail d={d} a={a} c={c}: mc {} exact {p_upper}", r.empirical));
                    }
                }
            }
        }
    }
    let detail = match mismatches.first() {
        None => format!("{compared} parameter sets agree with exact enumeration"),
        Some(m) => format!("{} mismatches, first: {m}", mismatches.len()),
    };
    outcome(mismatches.is_empty(), detail)
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("config.json");
    fs::write(
        &cfg_path,
        r#"{"kind":"logistic","d":3,"K":12,"n":200,"instances":3,"seed":11,"stride":5}"#,
    )
    .unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let mut trees = Vec::new();
    for rep in 0..2 {
        let dir = tmp.path().join(format!("rep{rep}"));
        let out = dir.to_str().unwrap();
        let agg = dir.join("aggregate_logistic_d3.csv");
        let cmds: Vec<Vec<&str>> = vec![
            vec!["gen", "--config", cfg, "--out", out],
            vec!["run", "--config", cfg, "--out", out, "--seed", "13"],
            vec!["verify", "all", "--out", out, "--samples", "2000", "--seed", "13"],
        ];
        for args in cmds {
            let status = Command::new(env!("CARGO_BIN_EXE_phe"))
                .args(&args)
                .output()
                .unwrap()
                .status;
            if !status.success() {
                return outcome(false, format!("{} exited with {status}", args[0]));
            }
        }
        let status = Command::new(env!("CARGO_BIN_EXE_phe"))
            .args(["plot", agg.to_str().unwrap(), "--out", out])
            .output()
            .unwrap()
            .status;
        if !status.success() {
            return outcome(false, format!("plot exited with {status}"));
        }
        trees.push(read_tree(&dir));
    }
    let files = trees[0].len();
    outcome(
        trees[0] == trees[1],
        format!("{files} output files compared byte for byte"),
    )
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("linear ordering (d=5, K=100, n=5000, 20 instances)", linear_ordering),
        (
            "logistic ordering (d=5, K=100, n=3000, 20 instances)",
            logistic_ordering,
        ),
        ("concentration tail bound", || {
            summarize(&concentration_suite(SEED, 1_000_000).unwrap())
        }),
        ("anti-concentration lower bound and symmetry", || {
            summarize(&anticoncentration_suite(SEED, 1_000_000).unwrap())
        }),
        ("width-sum inequality", || summarize(&width_sum_suite(SEED).unwrap())),
        ("grouped estimator equals per-round estimator", grouped_equals_naive),
        ("Sherman-Morrison inverse fidelity", sherman_morrison),
        ("logistic solver gradient and logit recovery", logistic_solver),
        ("enumeration oracle", enumeration_oracle),
        ("determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let res = check();
        let verdict = if res.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict}: {name} [{:.1}s] {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            res.detail
        );
        failed += usize::from(!res.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
