mod commands;
mod table;

use clap::{Args, Parser, Subcommand, ValueEnum};
use plopt_core::number::{self, Rational};
use plopt_core::optimizer::RatioQuality;
use plopt_core::{IrrelevancePolicy, StddevForm};
use std::path::PathBuf;
use std::process::ExitCode;

/// Score product-line quality, find gaps and choose architecture modifications.
#[derive(Debug, Parser)]
#[command(name = "plopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Quality model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Assessment (score matrix) JSON.
    #[arg(long)]
    assessment: PathBuf,
    /// How irrelevant cells are scored.
    #[arg(long, default_value = "perfect", value_parser = parse_policy)]
    policy: IrrelevancePolicy,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[command(flatten)]
    inputs: ModelArgs,
    /// Modifications catalog JSON.
    #[arg(long)]
    catalog: PathBuf,
    /// Quality term of the ratio objective.
    #[arg(long, default_value = "gain", value_parser = parse_quality)]
    ratio_quality: RatioQuality,
    /// Worker threads (default: all cores). PLOPT_THREADS takes precedence.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ObjectiveArgs {
    /// Maximize gain within this total cost.
    #[arg(long, value_parser = parse_budget)]
    budget: Option<Rational>,
    /// Maximize quality^gamma / cost.
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check input files against every invariant.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        assessment: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, default_value = "perfect", value_parser = parse_policy)]
        policy: IrrelevancePolicy,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Weighted scores, product quality and overall adherence.
    Score {
        #[command(flatten)]
        inputs: ModelArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Per-feature gaps and flagged weak spots.
    Gaps {
        #[command(flatten)]
        inputs: ModelArgs,
        #[arg(long, default_value = "population", value_parser = parse_stddev)]
        stddev: StddevForm,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Number of non-empty feasible modification subsets.
    Count {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Best feasible subset under a budget or a ratio objective.
    Optimize {
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Every feasible subset, ranked by gain, as CSV.
    Pareto {
        #[command(flatten)]
        search: SearchArgs,
        /// Exponent for the objective column.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

fn parse_policy(s: &str) -> Result<IrrelevancePolicy, String> {
    s.parse()
}

fn parse_stddev(s: &str) -> Result<StddevForm, String> {
    s.parse()
}

fn parse_quality(s: &str) -> Result<RatioQuality, String> {
    s.parse()
}

fn parse_budget(s: &str) -> Result<Rational, String> {
    number::parse(s).map_err(|e| e.to_string())
}

/// Exit statuses.
const EXIT_FAILURE: u8 = 1;
const EXIT_NO_CANDIDATES: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_FAILURE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<plopt_core::Error>() {
                Some(plopt_core::Error::NoCandidates) => ExitCode::from(EXIT_NO_CANDIDATES),
                _ => ExitCode::from(EXIT_FAILURE),
            }
        }
    }
}
