//! Command-line front end: `gen`, `run`, `verify` and `plot`.
//!
//! Exit codes: 0 on success, 1 when an experiment or check fails, 2 on usage
//! or configuration errors.

pub mod plot;

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::environments::{generate_instance, InstanceKind};
use crate::error::{PheError, Result};
use crate::harness::{read_aggregate_csv, run_experiment, write_aggregate_csv, write_runs_csv, ExperimentConfig};
use crate::policies::{default_policies, PolicySpec};
use crate::verification::{run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default logging stride of the CSV outputs.
pub const DEFAULT_STRIDE: usize = 10;

/// Experiment configuration file, e.g.
/// `{"kind": "linear", "d": 5, "K": 100, "n": 10000, "instances": 100, "seed": 7,
///   "policies": [{"name": "linphe", "a": 0.5}]}`.
/// Without `policies` the default comparison for `kind` is run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub kind: InstanceKind,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    pub instances: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<PolicySpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| PheError::Config(format!("invalid config: {e}")))?;
        cfg.experiment(None)?;
        if cfg.stride == Some(0) {
            return Err(PheError::Config("stride must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| PheError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Validated experiment, with an optional seed override.
    pub fn experiment(&self, seed: Option<u64>) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            kind: self.kind,
            d: self.d,
            k: self.k,
            n: self.n,
            num_instances: self.instances,
            master_seed: seed.unwrap_or(self.seed),
            policies: self.policies.clone().unwrap_or_else(|| default_policies(self.kind)),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// File-name tag `<kind>_d<d>`.
    pub fn tag(&self) -> String {
        format!("{}_d{}", self.kind, self.d)
    }
}

#[derive(Debug, Parser)]
#[command(name = "phe", version, about = "Perturbed-history exploration bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the instances of a configuration as JSON files.
    Gen(GenArgs),
    /// Run an experiment and write regret CSVs and a summary.
    Run(RunArgs),
    /// Run a verification suite and report one JSON object per check.
    Verify(VerifyArgs),
    /// Render aggregate CSVs as SVG regret plots.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, env = "PHE_JOBS")]
    jobs: Option<usize>,
    /// Log every `stride`-th round.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// concentration, anticoncentration, width-sum, variance or all.
    #[arg(value_parser = parse_suite)]
    suite: Suite,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo samples per check (suite default if omitted).
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Aggregate CSV files; one SVG is written per file.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: PheError| e.to_string())
}

#[derive(Debug, Serialize)]
struct PolicySummary<'a> {
    policy: &'a str,
    final_mean_regret: f64,
    final_stderr: f64,
    num_instances: usize,
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    config: &'a CliConfig,
    seed: u64,
    stride: usize,
    policies: Vec<PolicySummary<'a>>,
    failures: &'a [crate::harness::EpisodeFailure],
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<i32> {
    let cli_cfg = CliConfig::load(&args.config)?;
    let cfg = cli_cfg.experiment(args.seed)?;
    create_out_dir(&args.out)?;
    for i in 0..cfg.num_instances as u64 {
        let inst = generate_instance(cfg.kind, cfg.d, cfg.k, cfg.master_seed, i)?;
        let path = args.out.join(format!("instance_{}_{i:04}.json", cli_cfg.tag()));
        fs::write(path, inst.to_json()? + "\n")?;
    }
    Ok(EXIT_OK)
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let cli_cfg = CliConfig::load(&args.config)?;
    let cfg = cli_cfg.experiment(args.seed)?;
    let stride = args.stride.or(cli_cfg.stride).unwrap_or(DEFAULT_STRIDE);
    if stride == 0 {
        return Err(PheError::Config("stride must be positive".into()));
    }
    create_out_dir(&args.out)?;
    let outcome = run_experiment(&cfg, args.jobs.unwrap_or(0))?;

    let tag = cli_cfg.tag();
    write_file(&args.out.join(format!("runs_{tag}.csv")), |w| {
        write_runs_csv(&outcome.records, stride, w)
    })?;
    write_file(&args.out.join(format!("aggregate_{tag}.csv")), |w| {
        write_aggregate_csv(&outcome.curves, stride, w)
    })?;
    let summary = RunSummary {
        config: &cli_cfg,
        seed: cfg.master_seed,
        stride,
        policies: outcome
            .curves
            .iter()
            .map(|c| PolicySummary {
                policy: &c.policy,
                final_mean_regret: c.final_mean(),
                final_stderr: c.final_stderr(),
                num_instances: c.num_instances,
            })
            .collect(),
        failures: &outcome.failures,
    };
    fs::write(
        args.out.join(format!("summary_{tag}.json")),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;

    for c in &outcome.curves {
        eprintln!("{:<20} {:>12.3} +- {:.3}", c.policy, c.final_mean(), c.final_stderr());
    }
    for f in &outcome.failures {
        eprintln!(
            "episode failed: instance {} policy {}: {}",
            f.instance_id, f.policy, f.message
        );
    }
    Ok(if outcome.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let reports = run_suite(args.suite, args.seed, args.samples)?;
    let mut lines = String::new();
    for r in &reports {
        lines.push_str(&serde_json::to_string(r)?);
        lines.push('\n');
    }
    if let Some(dir) = &args.out {
        create_out_dir(dir)?;
        fs::write(dir.join(format!("verify_{}.jsonl", args.suite.as_str())), &lines)?;
    }
    std::io::stdout().write_all(lines.as_bytes())?;
    let passed = reports.iter().filter(|r| r.pass).count();
    eprintln!("{}: {passed}/{} checks passed", args.suite.as_str(), reports.len());
    Ok(if passed == reports.len() { EXIT_OK } else { EXIT_FAILURE })
}

/// `aggregate_linear_d5.csv` becomes `regret_linear_d5.svg`.
fn plot_name(input: &Path) -> (String, String) {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "aggregate".into());
    let base = stem.strip_prefix("aggregate_").unwrap_or(&stem).to_string();
    (format!("regret_{base}.svg"), base.replace('_', " "))
}

fn cmd_plot(args: &PlotArgs) -> Result<i32> {
    let mut rendered = Vec::new();
    for input in &args.inputs {
        let file = fs::File::open(input).map_err(|e| PheError::Config(format!("{}: {e}", input.display())))?;
        let groups = read_aggregate_csv(file)?;
        let (name, title) = plot_name(input);
        rendered.push((name, plot::render_svg(&title, &groups)));
    }
    create_out_dir(&args.out)?;
    for (name, svg) in rendered {
        fs::write(args.out.join(name), svg)?;
    }
    Ok(EXIT_OK)
}

fn exit_code(e: &PheError) -> i32 {
    match e {
        PheError::Config(_) | PheError::Format(_) | PheError::Json(_) | PheError::InvalidParameter(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let res = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
