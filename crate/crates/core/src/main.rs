//! Command-line front end: regime estimation on CSV data, weighted-bootstrap
//! confidence intervals, exact small-instance oracle runs, and simulation
//! studies.
//!
//! Every subcommand prints one JSON document to stdout that embeds the fully
//! resolved configuration next to the results, so an artifact is enough to
//! rerun the job. Numbers are rounded to 12 significant digits before
//! serialization and all randomness derives from `--seed`, which makes
//! repeated runs byte-identical regardless of the worker-pool size. Timing
//! goes to stderr, never into the artifact.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad files, impossible
//! configurations, degenerate samples), 2 on numerical failures.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use otr::data::Dataset;
use otr::inference::{bootstrap_replicates, BootstrapConfig, WeightFamily};
use otr::kernel::SmoothingKernel;
use otr::objective;
use otr::optimizer::{estimate_regime, OptimizerMode, ProximalConfig, RegimeEstimate};
use otr::oracle::{exact_nonsmooth_argmax, OracleLimits};
use otr::propensity::{fit_logistic, predict_propensity};
use otr::simulate::{run_coverage_study, run_estimation_study, Setting, SimulationSpec};
use otr::{Error, Result};

/// Individualized treatment rules I(x'beta > 0) by kernel-smoothed value
/// maximization.
#[derive(Parser)]
#[command(name = "otr", version, about, max_term_width = 100)]
struct Cli {
    /// Base RNG seed; recorded in every artifact.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: logical cores; OTR_THREADS as fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Also write the JSON artifact to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the smoothed-objective treatment rule on a CSV dataset.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Fit the rule and attach weighted-bootstrap confidence intervals.
    Bootstrap {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        boot: BootArgs,
    },
    /// Exactly maximize the nonsmooth objective by hyperplane enumeration
    /// (small instances only).
    Oracle {
        #[command(flatten)]
        data: DataArgs,
        /// Largest sample size the enumeration accepts.
        #[arg(long, default_value_t = 500)]
        max_n: usize,
        /// Largest covariate count the enumeration accepts.
        #[arg(long, default_value_t = 3)]
        max_p: usize,
    },
    /// Run a simulation study and report bias, spread, match ratio, and
    /// (with --B) bootstrap coverage.
    Simulate {
        /// Generative design: s1, s2, s3, s4, s5, binary, observational,
        /// or local.
        #[arg(long)]
        setting: String,
        /// Sample size per replicate.
        #[arg(long)]
        n: usize,
        /// Number of study replicates.
        #[arg(long)]
        reps: usize,
        /// Smoothing kernel.
        #[arg(long, value_enum, default_value_t = KernelChoice::Gaussian)]
        kernel: KernelChoice,
        /// Bootstrap replicates per study replicate; enables coverage
        /// metrics.
        #[arg(long = "B")]
        replicates_b: Option<usize>,
        /// Two-sided miscoverage level of the bootstrap intervals.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Bootstrap weight distribution.
        #[arg(long, value_enum, default_value_t = WeightChoice::Exp)]
        weights: WeightChoice,
        /// Fresh covariate draws per replicate for the match ratio.
        #[arg(long, default_value_t = 10_000)]
        eval_sample: usize,
        /// Local-model direction s as four comma-separated numbers
        /// (anchor coordinate must be zero).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        local_s: Option<Vec<f64>>,
    },
}

/// CSV input layout shared by the data-driven subcommands.
#[derive(Args)]
struct DataArgs {
    /// Input CSV with one row per subject.
    #[arg(long)]
    data: PathBuf,
    /// Outcome column; larger outcomes are better.
    #[arg(long)]
    outcome: String,
    /// Treatment indicator column with values 0 and 1.
    #[arg(long)]
    treatment: String,
    /// Comma-separated covariate columns, in design order.
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    /// Covariate whose coefficient is normalized to magnitude one.
    #[arg(long)]
    anchor: String,
    /// Use the listed covariates as-is instead of prepending an intercept.
    #[arg(long)]
    no_intercept: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        Dataset::load_csv(
            &self.data,
            &self.outcome,
            &self.treatment,
            &self.covariates,
            !self.no_intercept,
            &self.anchor,
        )
    }

    fn echo(&self) -> Value {
        json!({
            "data": self.data.display().to_string(),
            "outcome": self.outcome,
            "treatment": self.treatment,
            "covariates": self.covariates,
            "anchor": self.anchor,
            "intercept": !self.no_intercept,
        })
    }
}

/// Estimator knobs shared by `estimate` and `bootstrap`.
#[derive(Args)]
struct FitArgs {
    /// Smoothing kernel.
    #[arg(long, value_enum, default_value_t = KernelChoice::Gaussian)]
    kernel: KernelChoice,
    /// Initial proximal step scale.
    #[arg(long, default_value_t = 1.0)]
    alpha0: f64,
    /// Growth factor of the step scale across passes.
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    /// Iteration cap of the proximal loop.
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Stopping tolerance on the step norm.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Leave the anchor coefficient free or pin it at +/-1.
    #[arg(long, value_enum, default_value_t = ModeChoice::FullVector)]
    mode: ModeChoice,
    /// Fit a logistic propensity model on the covariates instead of
    /// assuming a randomized trial.
    #[arg(long)]
    observational: bool,
}

impl FitArgs {
    fn proximal(&self) -> ProximalConfig {
        ProximalConfig {
            alpha0: self.alpha0,
            gamma: self.gamma,
            max_iterations: self.max_iter,
            step_tolerance: self.tol,
            mode: self.mode.into(),
            initial_beta: None,
        }
    }

    fn propensity(&self, data: &Dataset) -> Result<Option<Vec<f64>>> {
        if !self.observational {
            return Ok(None);
        }
        let model = fit_logistic(data.covariates(), data.n(), data.p(), data.treatment())?;
        predict_propensity(&model, data.covariates(), data.n(), data.p()).map(Some)
    }

    fn echo(&self) -> Value {
        json!({
            "kernel": self.kernel,
            "alpha0": self.alpha0,
            "gamma": self.gamma,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "mode": self.mode,
            "observational": self.observational,
        })
    }
}

#[derive(Args)]
struct BootArgs {
    /// Number of bootstrap replicates.
    #[arg(long = "B", default_value_t = 1000)]
    replicates_b: usize,
    /// Two-sided miscoverage level of the intervals.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap weight distribution (mean one, variance one).
    #[arg(long, value_enum, default_value_t = WeightChoice::Exp)]
    weights: WeightChoice,
}

#[derive(Debug, Clone, Copy, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum KernelChoice {
    /// Gaussian distribution function; bandwidth rate n^(-1/5).
    Gaussian,
    /// Seventh-degree polynomial taper; bandwidth rate n^(-1/9).
    Poly7,
}

impl KernelChoice {
    fn build(self) -> SmoothingKernel {
        match self {
            KernelChoice::Gaussian => SmoothingKernel::gaussian_cdf(),
            KernelChoice::Poly7 => SmoothingKernel::polynomial7(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeChoice {
    FullVector,
    FixedAnchor,
}

impl From<ModeChoice> for OptimizerMode {
    fn from(choice: ModeChoice) -> Self {
        match choice {
            ModeChoice::FullVector => OptimizerMode::FullVector,
            ModeChoice::FixedAnchor => OptimizerMode::FixedAnchor,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum WeightChoice {
    Exp,
    Lognormal,
}

impl From<WeightChoice> for WeightFamily {
    fn from(choice: WeightChoice) -> Self {
        match choice {
            WeightChoice::Exp => WeightFamily::Exponential,
            WeightChoice::Lognormal => WeightFamily::LogNormal,
        }
    }
}

fn main() -> std::process::ExitCode {
    // Usage errors are validation failures (exit 1); help and version
    // requests are not errors at all.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            let code = u8::from(error.use_stderr());
            let _ = error.print();
            return std::process::ExitCode::from(code);
        }
    };
    let started = Instant::now();
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(error) => {
            eprintln!("error: {error}");
            if error.is_validation() {
                1
            } else {
                2
            }
        }
    };
    eprintln!("wall time: {:.3}s", started.elapsed().as_secs_f64());
    std::process::ExitCode::from(code)
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    let artifact = match &cli.command {
        Command::Estimate { data, fit } => run_estimate(cli, data, fit)?,
        Command::Bootstrap { data, fit, boot } => run_bootstrap(cli, data, fit, boot)?,
        Command::Oracle { data, max_n, max_p } => run_oracle(cli, data, *max_n, *max_p)?,
        Command::Simulate { .. } => run_simulate(cli)?,
    };
    emit(artifact, cli.out.as_deref())
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let requested = match flag {
        Some(threads) => Some(threads),
        None => match std::env::var("OTR_THREADS") {
            Ok(raw) => Some(raw.trim().parse::<usize>().map_err(|_| {
                Error::InvalidInput(format!(
                    "OTR_THREADS must be a positive integer, got {raw:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    let Some(threads) = requested else {
        return Ok(());
    };
    if threads == 0 {
        return Err(Error::InvalidInput("thread count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("cannot size the worker pool: {e}")))
}

fn run_estimate(cli: &Cli, data_args: &DataArgs, fit: &FitArgs) -> Result<Value> {
    let data = data_args.load()?;
    let propensity = fit.propensity(&data)?;
    let kernel = fit.kernel.build();
    let estimate = estimate_regime(&data, &kernel, &fit.proximal(), propensity.as_deref(), None)?;
    Ok(json!({
        "command": "estimate",
        "config": config_echo(cli, &[data_args.echo(), fit.echo()]),
        "result": estimate_body(&data, &estimate),
    }))
}

fn run_bootstrap(
    cli: &Cli,
    data_args: &DataArgs,
    fit: &FitArgs,
    boot: &BootArgs,
) -> Result<Value> {
    let data = data_args.load()?;
    let propensity = fit.propensity(&data)?;
    let kernel = fit.kernel.build();
    let config = BootstrapConfig::new(boot.replicates_b, boot.weights.into(), boot.alpha, cli.seed);
    let result = bootstrap_replicates(&data, &kernel, &fit.proximal(), &config, propensity.as_deref())?;
    let boot_echo = json!({
        "B": boot.replicates_b,
        "alpha": boot.alpha,
        "weights": boot.weights,
    });
    let mut body = estimate_body(&data, &result.base_estimate);
    body["coefficient_intervals"] = json!(result.coefficient_intervals);
    body["value_interval"] = json!(result.value_interval);
    body["B"] = json!(boot.replicates_b);
    body["failed"] = json!(result.failed_replicates);
    Ok(json!({
        "command": "bootstrap",
        "config": config_echo(cli, &[data_args.echo(), fit.echo(), boot_echo]),
        "result": body,
    }))
}

fn run_oracle(cli: &Cli, data_args: &DataArgs, max_n: usize, max_p: usize) -> Result<Value> {
    let data = data_args.load()?;
    let limits = OracleLimits {
        max_n,
        max_p,
        ..OracleLimits::default()
    };
    let (beta, objective) = exact_nonsmooth_argmax(&data, &limits)?;
    let value = objective::value_estimate(&data, &beta, None)?;
    let limits_echo = json!({ "max_n": max_n, "max_p": max_p });
    Ok(json!({
        "command": "oracle",
        "config": config_echo(cli, &[data_args.echo(), limits_echo]),
        "result": {
            "beta": beta,
            "objective": objective,
            "value": value,
        },
    }))
}

fn run_simulate(cli: &Cli) -> Result<Value> {
    let Command::Simulate {
        setting,
        n,
        reps,
        kernel,
        replicates_b,
        alpha,
        weights,
        eval_sample,
        local_s,
    } = &cli.command
    else {
        unreachable!("dispatched on the simulate arm");
    };
    let mut spec = SimulationSpec::new(Setting::parse(setting)?, *n, *reps, kernel.build(), cli.seed);
    spec.eval_sample_size = *eval_sample;
    spec.local_s = local_s.clone();
    if let Some(b) = replicates_b {
        spec.bootstrap = Some(BootstrapConfig::new(*b, (*weights).into(), *alpha, cli.seed));
    }
    let metrics = if spec.bootstrap.is_some() {
        run_coverage_study(&spec)?
    } else {
        run_estimation_study(&spec)?
    };
    eprintln!(
        "{} replicates in {:.3}s",
        metrics.replicates_completed, metrics.wall_time_seconds
    );
    let config = json!({
        "command": "simulate",
        "config": {
            "setting": spec.setting,
            "n": spec.n,
            "replicates": spec.replicates,
            "kernel": kernel,
            "bootstrap": spec.bootstrap,
            "eval_sample": spec.eval_sample_size,
            "local_s": spec.local_s,
            "seed": cli.seed,
        },
        "metrics": metrics,
    });
    if let Some(out) = &cli.out {
        write_metrics_csv(&out.with_extension("csv"), &config)?;
    }
    Ok(config)
}

fn estimate_body(data: &Dataset, estimate: &RegimeEstimate) -> Value {
    json!({
        "beta": estimate.beta,
        "beta_raw": estimate.beta_raw,
        "anchor": data.column_names[data.anchor_index],
        "h": estimate.bandwidth_h,
        "objective": estimate.objective_value,
        "value": estimate.sample_value,
        "iterations": estimate.iterations,
        "converged": estimate.converged,
        "mode_used": estimate.mode_used,
    })
}

fn config_echo(cli: &Cli, parts: &[Value]) -> Value {
    let mut merged = serde_json::Map::new();
    for part in parts {
        if let Value::Object(map) = part {
            for (key, value) in map {
                merged.insert(key.clone(), value.clone());
            }
        }
    }
    merged.insert("seed".into(), json!(cli.seed));
    Value::Object(merged)
}

/// Flatten the simulate artifact into a one-row CSV next to the JSON file.
fn write_metrics_csv(path: &Path, artifact: &Value) -> Result<()> {
    let mut rounded = artifact.clone();
    round_numbers(&mut rounded);
    let mut header = Vec::new();
    let mut row = Vec::new();
    flatten(&rounded, String::new(), &mut header, &mut row);
    let text = format!("{}\n{}\n", header.join(","), row.join(","));
    std::fs::write(path, text)?;
    Ok(())
}

fn flatten(value: &Value, prefix: String, header: &mut Vec<String>, row: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (key, child) in map {
                let name = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                flatten(child, name, header, row);
            }
        }
        Value::Array(items) => {
            for (index, child) in items.iter().enumerate() {
                flatten(child, format!("{prefix}.{index}"), header, row);
            }
        }
        Value::Null => {
            header.push(prefix);
            row.push(String::new());
        }
        Value::Bool(b) => {
            header.push(prefix);
            row.push(b.to_string());
        }
        Value::Number(n) => {
            header.push(prefix);
            row.push(n.to_string());
        }
        Value::String(s) => {
            header.push(prefix);
            row.push(s.clone());
        }
    }
}

/// Round every float to 12 significant digits so artifacts are byte-stable.
fn round_numbers(value: &mut Value) {
    match value {
        Value::Number(number) => {
            if number.is_f64() {
                let x = number.as_f64().expect("checked f64");
                if let Some(rounded) = serde_json::Number::from_f64(round_significant(x)) {
                    *number = rounded;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific notation round-trips")
}

fn emit(mut artifact: Value, out: Option<&Path>) -> Result<()> {
    round_numbers(&mut artifact);
    let mut text = serde_json::to_string_pretty(&artifact)
        .map_err(|e| Error::Numerical(format!("cannot serialize the artifact: {e}")))?;
    text.push('\n');
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, &text)?;
    }
    Ok(())
}
