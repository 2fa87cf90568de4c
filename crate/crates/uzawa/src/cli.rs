//! Command-line front end: three experiment drivers behind one binary.
//!
//! `toy` runs the single-slot quadratic saddle-point demo, `lqg` the
//! bias/variance decomposition of the stochastic dual iterate, and `tcl`
//! the device-fleet coordination run. All numeric artifacts are CSV with a
//! one-line header, accompanied by a `manifest.json` with content hashes
//! and the exact `config.toml` the run used. Exit codes: 0 on success, 1 on
//! a solver or run failure, 2 on a configuration problem.

use std::env;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};

use crate::ascent::{estimate_dual_value, stochastic_uzawa};
use crate::config::{
    AlgorithmSection, ConfigError, RunConfig, ScheduleSection, SeedSection,
};
use crate::lqg::{bias_variance_experiment, BiasVarianceReport, LqgInstance};
use crate::report::{sha256_hex, RunManifest};
use crate::tcl::coordination::write_artifacts;
use crate::tcl::coordination_experiment;
use crate::toy::ToyProblem;
use crate::trace::TraceMeta;

#[derive(Parser)]
#[command(
    name = "uzawa",
    version,
    about = "Price decomposition of aggregate-coupled stochastic control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-slot quadratic saddle-point demo; prints the multiplier and
    /// the estimated dual value, and checks them against the analytic
    /// saddle point on runs of 1000 iterations or more
    Toy(ToyArgs),
    /// Bias/variance decomposition of the dual iterate on the tracking
    /// benchmark; writes three CSV tables and a slope summary
    Lqg(CommonArgs),
    /// Device-fleet price coordination against the commitment model, one
    /// scenario per volatility; writes prices, profiles, dispatch and costs
    Tcl(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration (see the config module docs for the keys)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding [seed].master
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration count, overriding [algorithm].iterations; for lqg this
    /// caps the checkpoint ladder instead
    #[arg(long)]
    iterations: Option<usize>,
    /// Worker threads; results are identical for any value
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default runs/<command>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated scenario volatilities in °C/√hour, overriding
    /// [algorithm].sigmas (tcl only)
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
}

#[derive(Args)]
struct ToyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Step-size schedule, e.g. a=1,b=10
    #[arg(long, value_parser = parse_schedule_flag)]
    schedule: Option<ScheduleSection>,
}

fn parse_schedule_flag(text: &str) -> Result<ScheduleSection, String> {
    let mut a = None;
    let mut b = None;
    for part in text.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| format!("cannot parse {value:?}: {e}"))?;
        match key.trim() {
            "a" => a = Some(value),
            "b" => b = Some(value),
            other => return Err(format!("unknown schedule key {other:?} (want a, b)")),
        }
    }
    match (a, b) {
        (Some(a), Some(b)) => Ok(ScheduleSection { a, b }),
        _ => Err("schedule needs both a and b, e.g. a=1,b=10".into()),
    }
}

enum CliError {
    Config(ConfigError),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

/// Parses arguments and runs the selected command, mapping errors onto the
/// documented exit codes.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Toy(args) => cmd_toy(args),
        Command::Lqg(args) => cmd_lqg(args),
        Command::Tcl(args) => cmd_tcl(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn command_line() -> String {
    env::args().collect::<Vec<_>>().join(" ")
}

fn init_workers(workers: Option<usize>) -> Result<(), CliError> {
    let Some(n) = workers else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Config(ConfigError::Invalid {
            key: "--workers".into(),
            message: "need at least one worker thread".into(),
        }));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(runtime)
}

/// Loads `--config` (or an empty config) and folds the shared flag
/// overrides into their sections.
fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(master) = common.seed {
        config.seed = Some(SeedSection { master });
    }
    if common.iterations.is_some() || common.sigma.is_some() {
        let algorithm = config
            .algorithm
            .get_or_insert_with(AlgorithmSection::default);
        if let Some(k) = common.iterations {
            algorithm.iterations = Some(k);
        }
        if let Some(sigmas) = &common.sigma {
            algorithm.sigmas = Some(sigmas.clone());
        }
    }
    Ok(config)
}

fn out_dir(common: &CommonArgs, default: &str) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(default))
}

fn cmd_toy(args: ToyArgs) -> Result<(), CliError> {
    init_workers(args.common.workers)?;
    let mut config = load_config(&args.common)?;
    if let Some(schedule) = args.schedule {
        config.schedule = Some(schedule);
    }
    let (plan, effective) = config.resolve_toy()?;

    let problem = ToyProblem::new();
    let trace =
        stochastic_uzawa(&problem, &plan.schedule, plan.iterations, plan.seed).map_err(runtime)?;
    let multiplier = trace.final_lambda().get(0, 0);
    println!(
        "multiplier after {} iterations: {multiplier:.6}  (saddle point -0.5)",
        plan.iterations
    );
    let estimate = estimate_dual_value(&problem, trace.final_lambda(), 20_000, plan.seed ^ 0x75)
        .map_err(runtime)?;
    println!(
        "dual value estimate: {:.6} ± {:.6}  (saddle value 0.25)",
        estimate.value, estimate.half_width
    );

    if let Some(dir) = &args.common.out {
        fs::create_dir_all(dir).map_err(runtime)?;
        let snapshot = effective.snapshot();
        let mut manifest = RunManifest::begin(
            command_line(),
            Some(sha256_hex(snapshot.as_bytes())),
            plan.seed,
        );
        let mut csv = Vec::new();
        trace.write_csv(&mut csv).map_err(runtime)?;
        manifest.emit(dir, "trace.csv", &csv).map_err(runtime)?;
        let mut meta = Vec::new();
        TraceMeta::new(
            plan.seed,
            &plan.schedule,
            plan.iterations,
            "toy saddle point".into(),
        )
        .write_json(&mut meta)
        .map_err(runtime)?;
        manifest.emit(dir, "trace.json", &meta).map_err(runtime)?;
        manifest
            .emit(dir, "config.toml", snapshot.as_bytes())
            .map_err(runtime)?;
        manifest.finish(dir).map_err(runtime)?;
        println!("artifacts in {}", dir.display());
    }

    // Convergence is only claimed once the step sizes have had time to
    // anneal; short diagnostic runs just print the iterate.
    if plan.iterations >= 1000 {
        if (multiplier + 0.5).abs() >= 0.05 {
            return Err(runtime(anyhow!(
                "multiplier {multiplier:.4} strayed from the saddle point -0.5"
            )));
        }
        if (estimate.value - 0.25).abs() >= 0.01 {
            return Err(runtime(anyhow!(
                "dual value {:.4} strayed from the saddle value 0.25",
                estimate.value
            )));
        }
    }
    Ok(())
}

fn slope_summary(report: &BiasVarianceReport) -> String {
    let mut out = String::from("quantity,fixed,slope\n");
    for &n in &report.populations {
        if let Some(slope) = report.slope_variance_vs_iteration(n) {
            out.push_str(&format!("variance_vs_iteration,{n},{slope}\n"));
        }
    }
    for &k in &report.checkpoints {
        if let Some(slope) = report.slope_variance_vs_population(k) {
            out.push_str(&format!("variance_vs_population,{k},{slope}\n"));
        }
    }
    out
}

fn cmd_lqg(args: CommonArgs) -> Result<(), CliError> {
    init_workers(args.workers)?;
    let config = load_config(&args)?;
    let (mut plan, mut effective) = config.resolve_lqg()?;

    if let Some(cap) = args.iterations {
        if cap == 0 {
            return Err(CliError::Config(ConfigError::Invalid {
                key: "--iterations".into(),
                message: "the checkpoint cap must be ≥ 1".into(),
            }));
        }
        let mut capped: Vec<usize> = plan
            .checkpoints
            .iter()
            .copied()
            .filter(|&k| k <= cap)
            .collect();
        if capped.is_empty() {
            capped.push(cap);
        }
        plan.checkpoints = capped.clone();
        if let Some(section) = effective.lqg.as_mut() {
            section.checkpoints = Some(capped);
        }
    }

    let make = |n: usize| {
        if plan.spread == 0.0 {
            LqgInstance::homogeneous(n, plan.agent.clone(), plan.aggregate.clone())
        } else {
            LqgInstance::heterogeneous(
                n,
                plan.agent.clone(),
                plan.aggregate.clone(),
                plan.seed,
                plan.spread,
            )
        }
    };
    let report = bias_variance_experiment(
        make,
        &plan.populations,
        &plan.checkpoints,
        plan.runs,
        &plan.schedule,
        plan.seed,
    )
    .map_err(runtime)?;

    for &n in &report.populations {
        if let Some(slope) = report.slope_variance_vs_iteration(n) {
            println!("variance vs iterations at n = {n}: log-log slope {slope:.3}");
        }
    }
    for &k in &report.checkpoints {
        if let Some(slope) = report.slope_variance_vs_population(k) {
            println!("variance vs population at k = {k}: log-log slope {slope:.3}");
        }
    }
    if let (Some(&n), Some(&k)) = (report.populations.last(), report.checkpoints.last()) {
        if let Some(cell) = report.cell(k, n) {
            println!(
                "largest grid point (n = {n}, k = {k}): ‖bias‖² = {:.3e}, variance = {:.3e}",
                cell.bias_norm_sq, cell.variance
            );
        }
    }

    let dir = out_dir(&args, "lqg");
    fs::create_dir_all(&dir).map_err(runtime)?;
    let snapshot = effective.snapshot();
    let mut manifest = RunManifest::begin(
        command_line(),
        Some(sha256_hex(snapshot.as_bytes())),
        plan.seed,
    );
    manifest
        .emit(
            &dir,
            "variance_vs_iteration.csv",
            report.variance_vs_iteration_csv().as_bytes(),
        )
        .map_err(runtime)?;
    manifest
        .emit(
            &dir,
            "variance_vs_population.csv",
            report.variance_vs_population_csv().as_bytes(),
        )
        .map_err(runtime)?;
    manifest
        .emit(&dir, "bias.csv", report.bias_csv().as_bytes())
        .map_err(runtime)?;
    manifest
        .emit(&dir, "summary.csv", slope_summary(&report).as_bytes())
        .map_err(runtime)?;
    manifest
        .emit(&dir, "config.toml", snapshot.as_bytes())
        .map_err(runtime)?;
    manifest.finish(&dir).map_err(runtime)?;
    println!("artifacts in {}", dir.display());
    Ok(())
}

fn cmd_tcl(args: CommonArgs) -> Result<(), CliError> {
    init_workers(args.workers)?;
    let config = load_config(&args)?;
    let (coordination, seed, effective) = config.resolve_tcl()?;

    let report = coordination_experiment(&coordination, seed).map_err(runtime)?;
    for scenario in &report.scenarios {
        println!(
            "σ = {} °C/√h: system cost {:.4} uncoordinated vs {:.4} coordinated \
             (saving {:.2}%), corr(price, consumption) = {:.3}",
            scenario.sigma,
            scenario.bau_cost,
            scenario.fs_cost,
            100.0 * scenario.relative_saving(),
            scenario.price_consumption_correlation()
        );
    }

    let dir = out_dir(&args, "tcl");
    fs::create_dir_all(&dir).map_err(runtime)?;
    write_artifacts(&report, &effective.snapshot(), &command_line(), &dir).map_err(runtime)?;
    println!("artifacts in {}", dir.display());
    Ok(())
}
