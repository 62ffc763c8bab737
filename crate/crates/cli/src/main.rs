//! `xplainbench` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "xplainbench",
    version,
    about = "Train tabular classifiers, explain them with Shapley values, and report fidelity and sparsity",
    after_help = "Exit codes: 0 ok, 1 runtime error, 2 invalid input, 3 partial failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed override: the generator seed for gen-data, split, model and explainer seeds for run and bench
    #[arg(long, global = true, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Output format for reports and tables
    #[arg(long, global = true, value_enum, default_value_t = Format::Md)]
    pub format: Format,

    /// Write the main output to this file instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// More log output on stderr (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Md,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic driver-alertness dataset as CSV
    GenData(GenDataArgs),
    /// Validate and execute one pipeline spec
    Run(RunArgs),
    /// Run a suite of specs and print the performance and explainability tables
    Bench(BenchArgs),
    /// Ask a chat-completions endpoint (or a replay fixture) for a pipeline spec
    AskLlm(AskLlmArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Number of rows
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,

    /// Lower bound of the alert-compatible heart-rate band (bpm)
    #[arg(long, default_value_t = 60)]
    pub hr_band_low: u32,

    /// Upper bound of the alert-compatible heart-rate band (bpm)
    #[arg(long, default_value_t = 100)]
    pub hr_band_high: u32,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Pipeline spec (JSON)
    pub spec: PathBuf,

    /// Override the sparsity threshold
    #[arg(long, value_parser = parse_tau)]
    pub tau: Option<f64>,

    /// Override the number of test rows explained
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub eval_sample: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of *.json specs; without it the builtin suite runs
    #[arg(long, value_name = "DIR")]
    pub suite: Option<PathBuf>,

    /// Yeast CSV used by the builtin suite
    #[arg(long, value_name = "PATH", default_value = "yeast.csv", conflicts_with = "suite")]
    pub yeast: PathBuf,

    /// Override the sparsity threshold
    #[arg(long, value_parser = parse_tau)]
    pub tau: Option<f64>,

    /// Override the number of test rows explained
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub eval_sample: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AskLlmArgs {
    /// Prompt task
    #[arg(long, value_enum)]
    pub task: TaskArg,

    /// Model family named in the prompt
    #[arg(long, value_enum)]
    pub family: FamilyArg,

    /// Chat-completions URL; the bearer token is read from XPLAINBENCH_API_KEY
    #[arg(long, value_name = "URL", required_unless_present_any = ["replay", "print_prompt"], conflicts_with = "replay")]
    pub endpoint: Option<String>,

    /// Answer from a recorded fixture instead of the network
    #[arg(long, value_name = "FIXTURE")]
    pub replay: Option<PathBuf>,

    /// Serve unmatched requests from the fixture in order instead of failing
    #[arg(long, requires = "replay")]
    pub lenient: bool,

    /// Record the live exchange into this fixture file
    #[arg(long, value_name = "FIXTURE", requires = "endpoint")]
    pub record: Option<PathBuf>,

    /// Model name sent to the endpoint
    #[arg(long, default_value = xplainbench::llm_client::DEFAULT_MODEL)]
    pub model: String,

    /// Sampling temperature
    #[arg(long, default_value_t = xplainbench::llm_client::DEFAULT_TEMPERATURE)]
    pub temperature: f64,

    /// Re-prompts after an invalid reply
    #[arg(long, default_value_t = xplainbench::llm_client::DEFAULT_MAX_RETRIES)]
    pub max_retries: usize,

    /// Exchange transcript (JSON); defaults to <out>.exchange.json when --out is given
    #[arg(long, value_name = "PATH")]
    pub transcript: Option<PathBuf>,

    /// Print the rendered prompt and exit
    #[arg(long, conflicts_with_all = ["endpoint", "replay"])]
    pub print_prompt: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Binary,
    Multiclass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    RandomForest,
    Gbt,
    Mlp,
    Lstm,
}

fn parse_tau(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if t >= 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err("must be finite and non-negative".into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    ExitCode::from(commands::dispatch(&cli) as u8)
}
