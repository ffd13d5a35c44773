use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use plausible_core::AggregationModel;

use crate::config::{default_grid, GibbsSettings, RunConfig, OUT_DIR_ENV};
use crate::error::{CliError, CliResult, EXIT_CONFIG};
use crate::ingest::ingest;
use crate::pipeline::{run, Command};
use crate::selfcheck::{run_selfcheck, Fault};
use crate::simulate::{simulate_to_dir, SimulateConfig};

#[derive(Debug, Parser)]
#[command(
    name = "plausible",
    version,
    about = "Plausibility aggregation and uncertainty-adjusted evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Posterior mean and spread of the plausibility vector per case.
    Aggregate(RunArgs),
    /// Annotation certainty and risk summaries per case.
    Certainty(RunArgs),
    /// Uncertainty-adjusted metrics of classifier predictions.
    Evaluate(RunArgs),
    /// Write synthetic cases drawn from a known ground truth.
    Simulate(SimArgs),
    /// Run the built-in oracle suites.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Cases file (JSONL).
    #[arg(long)]
    cases: PathBuf,
    /// Annotations file (JSONL).
    #[arg(long)]
    annotations: PathBuf,
    /// Predictions file (JSONL); required by `evaluate`.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Class catalogue (JSON) with names and risk levels.
    #[arg(long)]
    classes: Option<PathBuf>,
    #[arg(long, default_value = "pl", value_parser = parse_model)]
    model: AggregationModel,
    /// Comma-separated reliability grid (gamma or repetitions).
    #[arg(long, value_delimiter = ',')]
    reliability: Option<Vec<f64>>,
    /// Posterior samples per case.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    /// Gamma prior shape of the Plackett-Luce weights.
    #[arg(long)]
    alpha: Option<f64>,
    /// Gamma prior rate of the Plackett-Luce weights.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "k", value_delimiter = ',', default_value = "1,2,3")]
    k_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    depths: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    overlap_depth: usize,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Decision threshold of the score model.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    counts_alpha: f64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "plausible-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long)]
    num_classes: usize,
    /// Fixed comma-separated ground-truth weights.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Symmetric Dirichlet concentration for per-case ground truths.
    #[arg(long, default_value_t = 1.0)]
    concentration: f64,
    #[arg(long, default_value_t = 100)]
    cases: usize,
    #[arg(long, default_value_t = 5)]
    annotators: usize,
    /// Comma-separated explicit block sizes.
    #[arg(long, value_delimiter = ',', default_value = "1,1,1")]
    blocks: Vec<usize>,
    /// Probability that an annotator ranks uniformly at random.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = OUT_DIR_ENV, default_value = "plausible-sim")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelfcheckArgs {
    #[arg(long, hide = true)]
    inject_fault: Option<FaultArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    Normalization,
}

fn parse_model(s: &str) -> Result<AggregationModel, String> {
    s.parse().map_err(|e: plausible_core::Error| e.to_string())
}

impl RunArgs {
    fn to_config(&self) -> CliResult<RunConfig> {
        let mut config = RunConfig::new(self.model);
        let defaults = GibbsSettings::default();
        config.reliability_grid = match &self.reliability {
            Some(grid) if grid.is_empty() => {
                return Err(CliError::Config("--reliability grid is empty".into()))
            }
            Some(grid) => grid.clone(),
            None => default_grid(self.model),
        };
        config.num_samples = self.samples;
        config.gibbs = GibbsSettings {
            alpha: self.alpha.unwrap_or(defaults.alpha),
            beta: self.beta.unwrap_or(defaults.beta),
            burn_in: self.burn_in.unwrap_or(defaults.burn_in),
            stride: self.stride.unwrap_or(defaults.stride),
        };
        config.base_seed = self.seed;
        config.k_grid = self.k_grid.clone();
        config.certainty_depths = self.depths.clone();
        config.overlap_depth = self.overlap_depth;
        config.histogram_bins = self.bins;
        config.counts_alpha = self.counts_alpha;
        config.score_threshold = self.threshold;
        config.workers = self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        config.out_dir = self.out.clone();
        Ok(config)
    }
}

fn run_batch(command: Command, args: &RunArgs) -> CliResult<()> {
    let config = args.to_config()?;
    if command == Command::Evaluate && args.predictions.is_none() {
        return Err(CliError::Config("evaluate needs --predictions".into()));
    }
    config.validate()?;
    let dataset = ingest(
        &args.cases,
        &args.annotations,
        args.predictions.as_deref(),
        args.classes.as_deref(),
    )?;
    let summary = run(command, &config, &dataset)?;
    println!(
        "{}: {} cases, outputs in {}",
        command.name(),
        summary.num_cases,
        config.out_dir.display()
    );
    Ok(())
}

fn run_simulate(args: &SimArgs) -> CliResult<()> {
    let config = SimulateConfig {
        num_classes: args.num_classes,
        lambda: args.lambda.clone(),
        concentration: args.concentration,
        cases: args.cases,
        annotators: args.annotators,
        block_sizes: args.blocks.clone(),
        noise: args.noise,
        seed: args.seed,
    };
    let files = simulate_to_dir(&config, &args.out)?;
    println!(
        "simulate: {} cases written to {}",
        args.cases,
        files.cases.parent().unwrap_or(&args.out).display()
    );
    Ok(())
}

fn run_selfcheck_cmd(args: &SelfcheckArgs) -> CliResult<()> {
    let fault = args
        .inject_fault
        .map(|FaultArg::Normalization| Fault::Normalization);
    let results = run_selfcheck(fault);
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", r.name, r.detail);
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::SelfCheck(failed.join(", ")))
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
        }
    };
    let result = match &cli.command {
        Sub::Aggregate(a) => run_batch(Command::Aggregate, a),
        Sub::Certainty(a) => run_batch(Command::Certainty, a),
        Sub::Evaluate(a) => run_batch(Command::Evaluate, a),
        Sub::Simulate(a) => run_simulate(a),
        Sub::Selfcheck(a) => run_selfcheck_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
