//! `geodist`: regional word-usage analysis from the command line.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "geodist", version, about = "Statistically significant regional variation in word usage")]
struct Cli {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

/// Where and how to read a corpus.
#[derive(Args, Debug, Default)]
pub struct CorpusArgs {
    /// Corpus file.
    #[arg(long)]
    pub input: Option<String>,
    /// tweets, ngrams or tagged.
    #[arg(long)]
    pub format: Option<String>,
    /// Tagset for tagged corpora: penn, tweet or universal.
    #[arg(long)]
    pub tagset: Option<String>,
    /// Abort on the first malformed line instead of skipping it.
    #[arg(long)]
    pub strict: Option<bool>,
    #[arg(long)]
    pub lowercase: Option<bool>,
    #[arg(long)]
    pub strip_punctuation: Option<bool>,
    /// Minimum total count for a word to enter the vocabulary.
    #[arg(long)]
    pub min_count: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// linear or fixed.
    #[arg(long)]
    pub lr_schedule: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for observed training; 1 is deterministic.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct TestArgs {
    /// Null-model retrainings.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Confidence level of the null interval.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Z threshold: a number, abs:Z, observed:P or null:P.
    #[arg(long)]
    pub beta: Option<String>,
    /// Per-region count a word needs to be scored.
    #[arg(long)]
    pub score_min_count: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the per-region vocabulary of a corpus.
    Vocab {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Vocabulary TSV.
        #[arg(long)]
        out: Option<String>,
    },
    /// Rank words by log-probability difference between two regions.
    Freq {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        pair: Option<String>,
        /// add-one, or a fixed probability floor.
        #[arg(long)]
        smoothing: Option<String>,
        /// Keep this many words; 0 keeps all.
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Rank words by divergence of their POS tag distributions.
    Syntax {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        pair: Option<String>,
        /// Tagged occurrences a word needs in each region.
        #[arg(long)]
        min_support: Option<u64>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Output directory (syntax.tsv, pos.tsv).
        #[arg(long)]
        out: Option<String>,
    },
    /// Train a region-conditioned embedding model.
    Train {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Keep only documents of these regions.
        #[arg(long)]
        regions: Option<String>,
        #[command(flatten)]
        training: TrainArgs,
        /// Model file.
        #[arg(long)]
        out: Option<String>,
    },
    /// Standardized distance scores of every word for a region pair.
    Score {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        pair: Option<String>,
        #[arg(long)]
        score_min_count: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Permutation null model and significance report for a region pair.
    Significance {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Observed model; trained from the corpus when omitted.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        pair: Option<String>,
        #[command(flatten)]
        training: TrainArgs,
        #[command(flatten)]
        test: TestArgs,
        /// Report TSV; null scores go to `<stem>.null.tsv` beside it.
        #[arg(long)]
        out: Option<String>,
    },
    /// Semantic distance between two regions across time slices.
    Semdist {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        pair: Option<String>,
        /// Slice order; defaults to order of first appearance.
        #[arg(long)]
        slices: Option<String>,
        #[command(flatten)]
        training: TrainArgs,
        #[command(flatten)]
        test: TestArgs,
        /// Output directory.
        #[arg(long)]
        out: Option<String>,
    },
    /// Nearest neighbours of a word in one or all regional spaces.
    Neighbors {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        word: Option<String>,
        /// Region, or MAIN for the global vectors; all when omitted.
        #[arg(long)]
        region: Option<String>,
        #[arg(short, long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Generate a synthetic two-region corpus with planted variation.
    Synth {
        #[arg(long)]
        vocab_size: Option<usize>,
        #[arg(long)]
        exponent: Option<f64>,
        #[arg(long)]
        block_size: Option<usize>,
        /// Number of planted words.
        #[arg(long)]
        planted: Option<usize>,
        /// Effect size; several values produce one slice each.
        #[arg(long)]
        effects: Option<String>,
        /// Largest effect of the small variation on non-planted words.
        #[arg(long)]
        ambient: Option<f64>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        regions: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (corpus.tsv, truth.tsv).
        #[arg(long)]
        out: Option<String>,
    },
    /// Write plot-ready tables from earlier outputs.
    ExportPlots {
        /// Directory holding the upstream outputs.
        #[arg(long)]
        artifacts: Option<String>,
        /// freq-scatter, pos-bars, null-hist, semdist-series or neighbors-2d.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        pair: Option<String>,
        #[arg(long)]
        words: Option<String>,
        /// Neighbours added per word and region (neighbors-2d).
        #[arg(short, long)]
        k: Option<usize>,
        /// Read report_<slice>.tsv instead of report.tsv (null-hist).
        #[arg(long)]
        slice: Option<String>,
        #[arg(long)]
        smoothing: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Info,
            1 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("GEODIST_LOG")
        .format_timestamp(None)
        .init();

    match commands::run(cli.command, cli.config.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
