//! Region-labeled corpora: documents, tokenization, file readers and vocabularies.
//!
//! Three line-oriented UTF-8 layouts are understood:
//!
//! * tweets: `REGION<TAB>TEXT`
//! * ngrams: `REGION<TAB>SLICE<TAB>NGRAM_TEXT<TAB>COUNT`
//! * tagged: the tweets layout with every token written as `token_TAG`
//!
//! A [`Document`] is the unit that carries a region label, and the unit the
//! null model permutes.

mod reader;
mod tokenize;
mod vocab;

pub use reader::{
    collect_documents, format_document, parse_line, read_corpus, read_tagged_corpus,
    CorpusFormat, DocumentReader, IngestSummary, ReadMode, Tagset,
};
pub use tokenize::TokenizerConfig;
pub use vocab::{build_vocabulary, word_probability, Vocabulary, VocabularyBuilder};

use std::fmt;

use crate::error::{Error, Result};

/// Default vocabulary threshold on a word's total count.
pub const DEFAULT_MIN_COUNT: u64 = 10;

/// Placeholder region attached to the global embedding. Never a document label.
pub const MAIN_REGION: &str = "MAIN";

/// A user region label such as `US` or `NY`. Case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId(String);

impl RegionId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty()
            || name == MAIN_REGION
            || name.chars().any(|c| c.is_whitespace() || c == ',')
        {
            return Err(Error::InvalidRegion(name));
        }
        Ok(RegionId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for RegionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegionId::new(s)
    }
}

/// Parses a comma-separated region list such as `US,UK`.
pub fn parse_regions(list: &str) -> Result<Vec<RegionId>> {
    list.split(',').map(|s| RegionId::new(s.trim())).collect()
}

/// One region-labeled token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub region: RegionId,
    pub tokens: Vec<String>,
    /// POS tags aligned with `tokens`.
    pub tags: Option<Vec<String>>,
    /// Time-slice label (e.g. the year bucket of an n-gram row).
    pub slice: Option<String>,
    /// Occurrence count; n-gram rows carry their match count here.
    pub weight: u64,
}

impl Document {
    pub fn new(region: RegionId, tokens: Vec<String>) -> Self {
        Document {
            region,
            tokens,
            tags: None,
            slice: None,
            weight: 1,
        }
    }

    pub fn with_weight(mut self, weight: u64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_slice(mut self, slice: impl Into<String>) -> Self {
        self.slice = Some(slice.into());
        self
    }

    /// Checks the structural invariants: non-empty tokens, aligned tags, weight ≥ 1.
    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::InvalidArgument("document has no tokens".into()));
        }
        if let Some(tags) = &self.tags {
            if tags.len() != self.tokens.len() {
                return Err(Error::LengthMismatch(tags.len(), self.tokens.len()));
            }
        }
        if self.weight == 0 {
            return Err(Error::InvalidArgument("document weight must be >= 1".into()));
        }
        Ok(())
    }
}

/// Groups documents by slice label, keeping slices in order of first appearance.
/// Documents without a slice label are grouped under the empty string.
pub fn split_by_slice(docs: &[Document]) -> Vec<(String, Vec<Document>)> {
    let mut out: Vec<(String, Vec<Document>)> = Vec::new();
    for doc in docs {
        let label = doc.slice.clone().unwrap_or_default();
        match out.iter_mut().find(|(l, _)| *l == label) {
            Some((_, group)) => group.push(doc.clone()),
            None => out.push((label, vec![doc.clone()])),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn main_is_reserved() {
        assert!(RegionId::new("MAIN").is_err());
        assert!(RegionId::new("").is_err());
        assert!(RegionId::new("main").is_ok());
        assert!(RegionId::new("N Y").is_err());
    }

    #[test]
    fn document_validation() {
        let us = RegionId::new("US").unwrap();
        let mut doc = Document::new(us.clone(), vec!["a".into(), "b".into()]);
        assert!(doc.validate().is_ok());
        doc.tags = Some(vec!["NN".into()]);
        assert!(doc.validate().is_err());
        let doc = Document::new(us, vec![]);
        assert!(doc.validate().is_err());
    }

    #[test]
    fn slices_keep_first_appearance_order() {
        let r = RegionId::new("UK").unwrap();
        let docs = vec![
            Document::new(r.clone(), vec!["a".into()]).with_slice("1950"),
            Document::new(r.clone(), vec!["b".into()]).with_slice("1900"),
            Document::new(r, vec!["c".into()]).with_slice("1950"),
        ];
        let groups = split_by_slice(&docs);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].0, "1950");
        assert_eq!(groups[0].1.len(), 2);
        assert_eq!(groups[1].0, "1900");
    }
}
