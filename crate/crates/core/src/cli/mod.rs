//! The `acceptability` command line.
//!
//! Every command writes its outputs into `--out` (a directory, created if
//! missing) together with `config.json`, an echo of the parsed flags and the
//! resolved seed. Exit codes: 0 success, 1 usage, 2 data validation,
//! 3 numerical failure.

mod analyze;
mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{write_json, Direction, ExperimentType};

pub use analyze::{
    analyze_context, cmd_analyze_context, AnalysisInputs, AnalysisReport, ContextLines,
    PairwisePearson, PipelineSummary, UpperBoundPair, Warning,
};
pub use commands::CorrelationRow;

const FORMATS: &str = "\
File formats:
  corpus text      one sentence per line, blank line between documents
  testset.jsonl    {\"id\", \"target\", \"real_context\": [3 strings],
                    \"random_context\": [3 strings] | null,
                    \"origin\": \"original\"|\"degraded\", \"degradation_level\"}
  hits.jsonl       {\"hit_id\", \"sentence_ids\": [10 ids]}
  ratings.csv      worker_id,sentence_id,experiment,rating   (rating in 1..4)
  mean_ratings.csv sentence_id,experiment,mean,n_ratings
  logprobs.jsonl   {\"sentence_id\", \"provider\", \"direction\": \"uni\"|\"bi\",
                    \"context_variant\": \"none\"|\"real\"|\"random\",
                    \"tokens\": [{\"t\", \"lp\"}], \"n_target_tokens\"}
  scores.csv       sentence_id,provider,direction,context_variant,
                   lp,mean_lp,pen_lp,norm_lp,slor,n_tokens
Log-probabilities are natural logarithms.";

#[derive(Debug, Parser)]
#[command(name = "acceptability", version, about = "Sentence acceptability from language-model probabilities", after_long_help = FORMATS)]
pub struct Cli {
    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sample targets from a corpus, degrade them and bundle them into HITs.
    ///
    /// Writes testset.jsonl and, when the set divides into HITs of 2
    /// originals and 8 degraded sentences, hits.jsonl.
    BuildTestset(BuildTestsetArgs),
    /// Clean raw ratings and average them per sentence.
    ///
    /// Writes mean_ratings.csv and audit.json.
    Aggregate(AggregateArgs),
    /// Train forward and backward Kneser-Ney models plus a unigram model.
    ///
    /// Writes model.json.
    TrainLm(TrainLmArgs),
    /// Turn log-probabilities into acceptability measures.
    ///
    /// Writes scores.csv.
    Score(ScoreArgs),
    /// Correlate measures with mean human ratings.
    ///
    /// Writes correlations.csv.
    Evaluate(EvaluateArgs),
    /// Compare ratings collected with no, real and random context.
    ///
    /// Inputs may be raw ratings.csv files (cleaned here; upper bounds
    /// computed) or mean_ratings.csv files (upper bounds skipped). Writes
    /// report.json and scatter_*.csv.
    AnalyzeContext(AnalyzeContextArgs),
    /// Simulate crowd ratings for a test set and its HITs.
    ///
    /// Writes ratings.csv.
    SimulateRatings(SimulateRatingsArgs),
    /// Generate the seeded toy corpus.
    ///
    /// Writes corpus.txt.
    ToyCorpus(ToyCorpusArgs),
}

/// `--seed N` or `--seed auto`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedArg {
    Fixed(u64),
    Auto,
}

impl FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(SeedArg::Auto);
        }
        s.parse()
            .map(SeedArg::Fixed)
            .map_err(|_| format!("expected a non-negative integer or `auto`, got `{s}`"))
    }
}

impl SeedArg {
    pub fn resolve(self) -> u64 {
        match self {
            SeedArg::Fixed(s) => s,
            SeedArg::Auto => {
                let s = rand::random();
                log::info!("--seed auto chose {s}");
                s
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextArg {
    None,
    Real,
    Random,
}

impl From<ContextArg> for ExperimentType {
    fn from(c: ContextArg) -> Self {
        match c {
            ContextArg::None => ExperimentType::None,
            ContextArg::Real => ExperimentType::Real,
            ContextArg::Random => ExperimentType::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    Uni,
    Bi,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Uni => Direction::Uni,
            DirectionArg::Bi => Direction::Bi,
        }
    }
}

/// Comma-separated degradation levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Levels(pub Vec<u32>);

fn parse_levels(s: &str) -> std::result::Result<Levels, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<u32>()
                .map_err(|_| format!("bad degradation level `{p}`"))
        })
        .collect::<std::result::Result<_, _>>()
        .map(Levels)
}

#[derive(Debug, Args, Serialize)]
pub struct BuildTestsetArgs {
    /// Corpus text file
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub n_targets: usize,
    /// Comma-separated degradation levels; empty for originals only
    #[arg(long, default_value = "1,2,3,4", value_parser = parse_levels)]
    pub levels: Levels,
    #[arg(long)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AggregateArgs {
    #[arg(long)]
    pub ratings: PathBuf,
    /// Test set naming the original sentences used to screen workers.
    /// Without it no worker can be screened.
    #[arg(long)]
    pub testset: Option<PathBuf>,
    #[arg(long, default_value_t = crate::ratings::DEFAULT_MIN_FRACTION)]
    pub min_fraction: f64,
    #[arg(long, default_value_t = crate::ratings::DEFAULT_OUTLIER_SD)]
    pub outlier_sd: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainLmArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, default_value_t = crate::lm::DEFAULT_DISCOUNT)]
    pub discount: f64,
    #[arg(long, default_value_t = crate::lm::DEFAULT_MIN_COUNT)]
    pub min_count: u64,
    #[arg(long, default_value_t = crate::lm::DEFAULT_UNIGRAM_DELTA)]
    pub unigram_delta: f64,
    /// Corpus text file for a perplexity report
    #[arg(long)]
    pub heldout: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// model.json from train-lm
    #[arg(long, conflicts_with = "logprobs", required_unless_present = "logprobs")]
    pub model: Option<PathBuf>,
    /// logprobs.jsonl from an external scorer
    #[arg(long)]
    pub logprobs: Option<PathBuf>,
    #[arg(long)]
    pub testset: PathBuf,
    #[arg(long, value_enum, default_value_t = ContextArg::None)]
    pub context: ContextArg,
    #[arg(long, value_enum, default_value_t = DirectionArg::Uni)]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = crate::measures::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Unigram model (model.json or a unigram file). Required with
    /// --logprobs; defaults to the model's own with --model.
    #[arg(long)]
    pub unigram: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// One or more scores.csv files
    #[arg(long, required = true, num_args = 1..)]
    pub scores: Vec<PathBuf>,
    #[arg(long)]
    pub mean_ratings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeContextArgs {
    #[arg(long)]
    pub ratings_none: PathBuf,
    #[arg(long)]
    pub ratings_real: PathBuf,
    #[arg(long)]
    pub ratings_random: PathBuf,
    /// Test set naming the original sentences (raw ratings only)
    #[arg(long)]
    pub testset: Option<PathBuf>,
    #[arg(long, default_value_t = crate::ratings::DEFAULT_MIN_FRACTION)]
    pub min_fraction: f64,
    #[arg(long, default_value_t = crate::ratings::DEFAULT_OUTLIER_SD)]
    pub outlier_sd: f64,
    #[arg(long, default_value_t = crate::stats::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateRatingsArgs {
    #[arg(long)]
    pub testset: PathBuf,
    #[arg(long)]
    pub hits: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub workers_per_hit: usize,
    #[arg(long, default_value_t = 60)]
    pub pool_size: usize,
    #[arg(long)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ToyCorpusArgs {
    #[arg(long, default_value_t = 300)]
    pub docs: usize,
    #[arg(long)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a Command,
    seed: Option<u64>,
}

pub(crate) fn out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Parse `args` (program name first) and run the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .try_init();
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command) -> Result<()> {
    let (out, seed) = match cmd {
        Command::BuildTestset(a) => {
            let seed = a.seed.resolve();
            commands::build_testset(a, seed)?;
            (&a.out, Some(seed))
        }
        Command::Aggregate(a) => {
            commands::aggregate(a)?;
            (&a.out, None)
        }
        Command::TrainLm(a) => {
            commands::train_lm(a)?;
            (&a.out, None)
        }
        Command::Score(a) => {
            commands::score(a)?;
            (&a.out, None)
        }
        Command::Evaluate(a) => {
            commands::evaluate(a)?;
            (&a.out, None)
        }
        Command::AnalyzeContext(a) => {
            let seed = a.seed.resolve();
            analyze::cmd_analyze_context(a, seed)?;
            (&a.out, Some(seed))
        }
        Command::SimulateRatings(a) => {
            let seed = a.seed.resolve();
            commands::simulate_ratings(a, seed)?;
            (&a.out, Some(seed))
        }
        Command::ToyCorpus(a) => {
            let seed = a.seed.resolve();
            commands::toy_corpus(a, seed)?;
            (&a.out, Some(seed))
        }
    };
    write_json(
        &out.join("config.json"),
        &ConfigEcho {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: cmd,
            seed,
        },
    )
}
