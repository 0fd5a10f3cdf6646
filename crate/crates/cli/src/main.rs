//! `kanhope`: the hope-speech pipeline from the command line.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// An error caused by invalid input; exits with status 1.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Debug, Parser)]
#[command(name = "kanhope", version, about = "Hope speech detection for code-mixed Kannada-English text")]
pub struct Cli {
    /// Seed every random component derives its stream from.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (splits/, models/, reports/, manifests/).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Override a config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_key_value)]
    pub set: Vec<(String, String)>,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)] // parsed once per process
pub enum Command {
    /// Corpus statistics: posts, tokens, vocabulary and sentences.
    Stats {
        /// Dataset CSVs, counted together.
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        /// Clean the text before counting.
        #[arg(long)]
        clean: bool,
    },
    /// Replace URLs and emoji, drop special characters and extra spaces.
    Clean(TextInput),
    /// Script tags and code-mixing type of each comment.
    Codemix(TextInput),
    /// Krippendorff's alpha of an annotation file.
    Agreement {
        /// `unit_id,annotator_id,label` CSV.
        #[arg(long = "in")]
        input: PathBuf,
        /// `annotator_id,gender,higher_education,medium_of_schooling` CSV.
        #[arg(long)]
        roster: Option<PathBuf>,
    },
    /// Drop unwanted labels, then split into train, dev and test.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        /// train,dev,test fractions.
        #[arg(long)]
        fractions: Option<String>,
        /// Split without preserving class proportions.
        #[arg(long)]
        no_stratify: bool,
        /// Prefix of the three file names under splits/.
        #[arg(long, default_value = "")]
        out_prefix: String,
    },
    /// Fit a TF-IDF vocabulary on a training file.
    Featurize {
        #[arg(long)]
        train: PathBuf,
        /// Smallest and largest n-gram length, e.g. `1,5`.
        #[arg(long)]
        ngram: Option<String>,
        #[arg(long)]
        min_df: Option<String>,
        /// `word` or `char`.
        #[arg(long)]
        analyzer: Option<String>,
    },
    /// Train a classifier, one model per seed.
    Train(TrainArgs),
    /// Evaluate trained models on a labelled file.
    Eval {
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        #[arg(long)]
        test: PathBuf,
    },
    /// Average evaluation reports per model and print the table.
    Report {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Compare analytic and finite-difference gradients of random small
    /// dual-channel models.
    Gradcheck {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 8)]
        vocab: usize,
        #[arg(long, default_value_t = 10)]
        models: usize,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
    },
    /// Re-run the command recorded in a manifest into `--out` and compare
    /// the outputs byte for byte.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct TextInput {
    /// Dataset CSV.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// A single text, answered on stdout.
    #[arg(long)]
    pub text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Lr,
    Nb,
    Knn,
    Tree,
    Forest,
    Dc,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub kind: ModelKind,
    #[arg(long)]
    pub train: PathBuf,
    /// Dev file used to pick the best epoch of `dc`.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// A fitted TF-IDF model to reuse instead of fitting one on `--train`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Comma-separated seeds; one model each.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Logistic regression inverse regularization.
    #[arg(long = "C")]
    pub c: Option<String>,
    /// Naive Bayes smoothing.
    #[arg(long)]
    pub alpha: Option<String>,
    /// KNN neighbours.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub n_trees: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<String>,
    #[arg(long)]
    pub dim: Option<String>,
    /// Translation endpoint; comments without a stored translation are sent
    /// there.
    #[arg(long)]
    pub translate_url: Option<String>,
    /// Tab-separated translation cache.
    #[arg(long)]
    pub translation_cache: Option<PathBuf>,
}

fn exit_status(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<Invalid>().is_some() {
            return 1;
        }
        if let Some(k) = cause.downcast_ref::<kanhope::Error>() {
            return if k.is_validation() { 1 } else { 2 };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(cli, argv[1..].to_vec()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
