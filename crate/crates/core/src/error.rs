use std::io;

/// Errors produced by the analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {kind}")]
    Record { line: usize, kind: RecordError },

    #[error("invalid region label {0:?}")]
    InvalidRegion(String),

    #[error("unknown region {0:?}")]
    UnknownRegion(String),

    #[error("unknown word {0:?}")]
    UnknownWord(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("region pair must name two different regions, got {0:?} twice")]
    SameRegion(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("probability vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("probability vector is not normalized (sum = {0})")]
    NotNormalized(f64),

    #[error("insufficient support for {word:?}: {support_i} vs {support_j} (need {min_support})")]
    InsufficientSupport {
        word: String,
        support_i: u64,
        support_j: u64,
        min_support: u64,
    },

    #[error("vocabulary needs at least 2 words for a Huffman tree, got {0}")]
    VocabularyTooSmall(usize),

    #[error("cosine distance undefined for zero vector")]
    ZeroVector,

    #[error("embedding of {word:?} in region {region:?} is the zero vector")]
    ZeroEmbedding { word: String, region: String },

    #[error("non-finite parameter after epoch {epoch}")]
    NonFinite { epoch: usize },

    #[error("degenerate score population ({0})")]
    DegeneratePopulation(String),

    #[error("null model run {run} failed: {source}")]
    NullRun {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("word sets differ: only observed {only_observed:?}, only null {only_null:?}")]
    WordSetMismatch {
        only_observed: Vec<String>,
        only_null: Vec<String>,
    },

    #[error("no stable changed words")]
    NoStableWords,

    #[error("no standardized score for {0:?} in slice")]
    MissingScore(String),

    #[error("slice {slice:?} failed: {source}")]
    Slice {
        slice: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("missing artifact {0}")]
    MissingArtifact(String),
}

/// Record-level ingestion failures; wrapped in [`Error::Record`] with a line number.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("expected {expected} tab-separated columns, found {found}")]
    Columns { expected: usize, found: usize },
    #[error("empty document")]
    EmptyDocument,
    #[error("invalid weight {0:?}")]
    Weight(String),
    #[error("invalid region label {0:?}")]
    Region(String),
    #[error("missing tag separator in {0:?}")]
    MissingTag(String),
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
