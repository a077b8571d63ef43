//! Syntactic baseline: per-region POS-tag distributions of a word compared with
//! the Jensen–Shannon divergence.

use std::collections::HashMap;
use std::io::Write;

use crate::corpus::{Document, Tagset};
use crate::error::{Error, Result};

const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Empirical tag distribution of one word in one region.
#[derive(Debug, Clone, PartialEq)]
pub struct PosDistribution {
    pub word: String,
    pub region: String,
    /// One entry per tag of the tagset; all zero when `support == 0`.
    pub probs: Vec<f64>,
    /// Tagged occurrences observed.
    pub support: u64,
}

impl PosDistribution {
    pub fn is_empty(&self) -> bool {
        self.support == 0
    }
}

/// Tag counts per (word, region), built from tagged documents.
#[derive(Debug, Clone)]
pub struct PosCounts {
    tagset: Tagset,
    counts: HashMap<(String, String), Vec<u64>>,
}

impl PosCounts {
    pub fn new(tagset: Tagset) -> Self {
        PosCounts {
            tagset,
            counts: HashMap::new(),
        }
    }

    pub fn from_documents<'a>(
        docs: impl IntoIterator<Item = &'a Document>,
        tagset: &Tagset,
    ) -> Result<Self> {
        let mut counts = PosCounts::new(tagset.clone());
        for doc in docs {
            counts.add(doc)?;
        }
        Ok(counts)
    }

    pub fn tagset(&self) -> &Tagset {
        &self.tagset
    }

    /// Adds one tagged document. Untagged documents are rejected.
    pub fn add(&mut self, doc: &Document) -> Result<()> {
        let tags = doc
            .tags
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("document carries no tags".into()))?;
        if tags.len() != doc.tokens.len() {
            return Err(Error::LengthMismatch(tags.len(), doc.tokens.len()));
        }
        let n = self.tagset.len();
        for (tok, tag) in doc.tokens.iter().zip(tags) {
            let t = self.tagset.index_of(tag).ok_or_else(|| {
                Error::InvalidArgument(format!("unknown tag {tag:?} for tagset {}", self.tagset.name()))
            })?;
            let slot = self
                .counts
                .entry((tok.clone(), doc.region.as_str().to_string()))
                .or_insert_with(|| vec![0; n]);
            slot[t] += doc.weight;
        }
        Ok(())
    }

    pub fn merge(mut self, other: PosCounts) -> Result<Self> {
        if self.tagset != other.tagset {
            return Err(Error::InvalidArgument("cannot merge counts over different tagsets".into()));
        }
        for (key, c) in other.counts {
            let slot = self.counts.entry(key).or_insert_with(|| vec![0; c.len()]);
            slot.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        }
        Ok(self)
    }

    pub fn distribution(&self, word: &str, region: &str) -> PosDistribution {
        let n = self.tagset.len();
        let counts = self
            .counts
            .get(&(word.to_string(), region.to_string()));
        let support: u64 = counts.map_or(0, |c| c.iter().sum());
        let probs = match counts {
            Some(c) if support > 0 => c.iter().map(|&x| x as f64 / support as f64).collect(),
            _ => vec![0.0; n],
        };
        PosDistribution {
            word: word.to_string(),
            region: region.to_string(),
            probs,
            support,
        }
    }

    /// Words with at least one tagged occurrence in `region`, sorted.
    pub fn words_in(&self, region: &str) -> Vec<String> {
        let mut words: Vec<String> = self
            .counts
            .keys()
            .filter(|(_, r)| r == region)
            .map(|(w, _)| w.clone())
            .collect();
        words.sort();
        words
    }
}

/// Tag distribution of `word` in `region` over the tagged documents.
pub fn pos_distribution<'a>(
    docs: impl IntoIterator<Item = &'a Document>,
    word: &str,
    region: &str,
    tagset: &Tagset,
) -> Result<PosDistribution> {
    Ok(PosCounts::from_documents(docs, tagset)?.distribution(word, region))
}

fn validate(p: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for &x in p {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid probability {x}")));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(sum));
    }
    Ok(())
}

// x * log2(x / m), with 0 * log(0 / m) = 0.
fn kl_term(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / m).log2()
    }
}

/// Base-2 Jensen–Shannon divergence, in `[0, 1]`.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    validate(p)?;
    validate(q)?;
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = (a + b) / 2.0;
        // summed in an order that does not depend on which argument came first
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        total += kl_term(lo, m) + kl_term(hi, m);
    }
    Ok((total / 2.0).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntacticScore {
    pub word: String,
    pub region_i: String,
    pub region_j: String,
    pub jsd: f64,
    pub support_i: u64,
    pub support_j: u64,
}

pub fn syntactic_score(
    counts: &PosCounts,
    word: &str,
    ri: &str,
    rj: &str,
    min_support: u64,
) -> Result<SyntacticScore> {
    if ri == rj {
        return Err(Error::SameRegion(ri.to_string()));
    }
    let pi = counts.distribution(word, ri);
    let pj = counts.distribution(word, rj);
    if pi.support < min_support.max(1) || pj.support < min_support.max(1) {
        return Err(Error::InsufficientSupport {
            word: word.to_string(),
            support_i: pi.support,
            support_j: pj.support,
            min_support,
        });
    }
    Ok(SyntacticScore {
        word: word.to_string(),
        region_i: ri.to_string(),
        region_j: rj.to_string(),
        jsd: js_divergence(&pi.probs, &pj.probs)?,
        support_i: pi.support,
        support_j: pj.support,
    })
}

/// Scores every word with enough support in both regions, highest divergence first.
pub fn syntactic_ranking(counts: &PosCounts, ri: &str, rj: &str, min_support: u64) -> Result<Vec<SyntacticScore>> {
    let mut out = Vec::new();
    for word in counts.words_in(ri) {
        match syntactic_score(counts, &word, ri, rj, min_support) {
            Ok(s) => out.push(s),
            Err(Error::InsufficientSupport { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    out.sort_by(|a, b| b.jsd.total_cmp(&a.jsd).then_with(|| a.word.cmp(&b.word)));
    Ok(out)
}

pub fn write_syntactic_tsv<W: Write>(mut out: W, scores: &[SyntacticScore]) -> Result<()> {
    writeln!(
        out,
        "# geodist {}: word\tregion_i\tregion_j\tjsd\tsupport_i\tsupport_j",
        crate::VERSION
    )?;
    for s in scores {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            s.word, s.region_i, s.region_j, s.jsd, s.support_i, s.support_j
        )?;
    }
    Ok(())
}

/// Long-format tag bars: one row per (word, region, tag) with nonzero probability.
pub fn write_pos_bars<W: Write>(mut out: W, tagset: &Tagset, dists: &[PosDistribution]) -> Result<()> {
    writeln!(out, "# geodist {}: word\tregion\ttag\tprobability", crate::VERSION)?;
    for d in dists {
        for (tag, &p) in tagset.tags().iter().zip(&d.probs) {
            if p > 0.0 {
                writeln!(out, "{}\t{}\t{}\t{}", d.word, d.region, tag, p)?;
            }
        }
    }
    Ok(())
}
