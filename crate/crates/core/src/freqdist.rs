//! Frequency baseline: log-probability differences of a word between two regions.

use std::io::Write;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Probability floor applied before taking logs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Smoothing {
    /// Per-region floor `1 / (total_tokens(r) + |V|)`.
    #[default]
    AddOneFloor,
    /// The same floor for every region.
    Fixed(f64),
}

impl Smoothing {
    fn floor(self, vocab: &Vocabulary, region: usize) -> f64 {
        match self {
            Smoothing::AddOneFloor => 1.0 / (vocab.total_tokens(region) + vocab.len() as u64) as f64,
            Smoothing::Fixed(eps) => eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyScore {
    pub word: String,
    pub region_i: String,
    pub region_j: String,
    /// `ln P_i(w) - ln P_j(w)`; positive means more probable in `region_i`.
    pub delta: f64,
    /// The word occurs in exactly one of the two regions.
    pub exclusive: bool,
}

fn region_pair(vocab: &Vocabulary, ri: &str, rj: &str) -> Result<(usize, usize)> {
    if ri == rj {
        return Err(Error::SameRegion(ri.to_string()));
    }
    Ok((vocab.region_index(ri)?, vocab.region_index(rj)?))
}

fn score_index(vocab: &Vocabulary, w: usize, i: usize, j: usize, smoothing: Smoothing) -> (f64, bool) {
    let p = |r: usize| {
        let total = vocab.total_tokens(r);
        let raw = if total == 0 {
            0.0
        } else {
            vocab.region_count(w, r) as f64 / total as f64
        };
        raw.max(smoothing.floor(vocab, r))
    };
    let (ci, cj) = (vocab.region_count(w, i), vocab.region_count(w, j));
    (p(i).ln() - p(j).ln(), (ci == 0) != (cj == 0))
}

pub fn frequency_score(
    vocab: &Vocabulary,
    word: &str,
    ri: &str,
    rj: &str,
    smoothing: Smoothing,
) -> Result<FrequencyScore> {
    let (i, j) = region_pair(vocab, ri, rj)?;
    if let Smoothing::Fixed(eps) = smoothing {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
        }
    }
    let w = vocab.word_index(word)?;
    let (delta, exclusive) = score_index(vocab, w, i, j, smoothing);
    Ok(FrequencyScore {
        word: word.to_string(),
        region_i: ri.to_string(),
        region_j: rj.to_string(),
        delta,
        exclusive,
    })
}

/// All vocabulary words ranked by `|delta|` descending, ties by word.
pub fn frequency_ranking(
    vocab: &Vocabulary,
    ri: &str,
    rj: &str,
    smoothing: Smoothing,
    top_k: usize,
) -> Result<Vec<FrequencyScore>> {
    let mut scores = vocab
        .words()
        .iter()
        .map(|w| frequency_score(vocab, w, ri, rj, smoothing))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| {
        b.delta
            .abs()
            .total_cmp(&a.delta.abs())
            .then_with(|| a.word.cmp(&b.word))
    });
    scores.truncate(top_k);
    Ok(scores)
}

pub fn write_frequency_tsv<W: Write>(mut out: W, scores: &[FrequencyScore]) -> Result<()> {
    writeln!(
        out,
        "# geodist {}: word\tregion_i\tregion_j\tdelta\texclusive",
        crate::VERSION
    )?;
    for s in scores {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            s.word, s.region_i, s.region_j, s.delta, s.exclusive as u8
        )?;
    }
    Ok(())
}
