//! Detecting statistically significant regional variation in word usage.
//!
//! The crate trains word embeddings in which every word has one global vector
//! plus one differential vector per region, measures how far a word's
//! regional vectors drift apart, and decides with a label-permutation null
//! model whether that drift is larger than chance. Frequency and part-of-speech
//! baselines are included for comparison.

pub mod corpus;
pub mod embed;
pub mod error;
pub mod freqdist;
pub mod plots;
pub mod scoring;
pub mod semdist;
pub mod significance;
pub mod syndist;
pub mod synthgen;

pub use error::{Error, Result};

/// Crate version, written into the header line of every tabular output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpora.md")]
    mod corpora {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/embeddings.md")]
    mod embeddings {}
    #[doc = include_str!("../../../book/src/significance.md")]
    mod significance {}
    #[doc = include_str!("../../../book/src/semantic-distance.md")]
    mod semantic_distance {}
    #[doc = include_str!("../../../book/src/synthetic-data.md")]
    mod synthetic_data {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
