use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{Document, RegionId};
use crate::error::{Error, Result};

const VOCAB_MAGIC: &str = "geodist-vocab";
const VOCAB_VERSION: &str = "v1";

/// Word index with total and per-region counts.
///
/// Words are ordered by descending total count, ties broken by the word
/// itself, so indices are dense and deterministic. Region totals count only
/// tokens of retained words, which makes per-region probabilities sum to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    regions: Vec<RegionId>,
    counts: Vec<u64>,
    // word-major: counts of word w in region r at w * regions.len() + r
    region_counts: Vec<u64>,
    region_totals: Vec<u64>,
    min_count: u64,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word_index(&self, word: &str) -> Result<usize> {
        self.index_of(word)
            .ok_or_else(|| Error::UnknownWord(word.to_string()))
    }

    pub fn regions(&self) -> &[RegionId] {
        &self.regions
    }

    pub fn region_index(&self, region: &str) -> Result<usize> {
        self.regions
            .iter()
            .position(|r| r.as_str() == region)
            .ok_or_else(|| Error::UnknownRegion(region.to_string()))
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Total occurrences of the word at `idx`.
    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn region_count(&self, idx: usize, region: usize) -> u64 {
        self.region_counts[idx * self.regions.len() + region]
    }

    /// Tokens of retained words observed in `region`.
    pub fn total_tokens(&self, region: usize) -> u64 {
        self.region_totals[region]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Writes the plain-text vocabulary table.
    ///
    /// ```text
    /// geodist-vocab v1 <|V|> <R>
    /// regions<TAB>US<TAB>UK
    /// min_count<TAB>10
    /// word<TAB>total<TAB>count_US<TAB>count_UK
    /// ```
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{VOCAB_MAGIC} {VOCAB_VERSION} {} {}",
            self.len(),
            self.regions.len()
        )?;
        write!(out, "regions")?;
        for r in &self.regions {
            write!(out, "\t{r}")?;
        }
        writeln!(out)?;
        writeln!(out, "min_count\t{}", self.min_count)?;
        for (w, word) in self.words.iter().enumerate() {
            write!(out, "{word}\t{}", self.counts[w])?;
            for r in 0..self.regions.len() {
                write!(out, "\t{}", self.region_count(w, r))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self> {
        let bad = |msg: &str| Error::Format(format!("vocabulary: {msg}"));
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("missing header"))??;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.len() != 4 || fields[0] != VOCAB_MAGIC || fields[1] != VOCAB_VERSION {
            return Err(bad("bad header"));
        }
        let n_words: usize = fields[2].parse().map_err(|_| bad("bad |V|"))?;
        let n_regions: usize = fields[3].parse().map_err(|_| bad("bad R"))?;

        let region_line = lines.next().ok_or_else(|| bad("missing regions"))??;
        let mut cols = region_line.split('\t');
        if cols.next() != Some("regions") {
            return Err(bad("missing regions row"));
        }
        let regions = cols.map(RegionId::new).collect::<Result<Vec<_>>>()?;
        if regions.len() != n_regions {
            return Err(bad("region count mismatch"));
        }
        let min_line = lines.next().ok_or_else(|| bad("missing min_count"))??;
        let min_count = min_line
            .strip_prefix("min_count\t")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad min_count row"))?;

        let mut rows = Vec::with_capacity(n_words);
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != n_regions + 2 {
                return Err(bad("bad row width"));
            }
            let per_region = cols[2..]
                .iter()
                .map(|c| c.parse::<u64>().map_err(|_| bad("bad count")))
                .collect::<Result<Vec<_>>>()?;
            let total: u64 = cols[1].parse().map_err(|_| bad("bad count"))?;
            if per_region.iter().sum::<u64>() != total {
                return Err(bad("per-region counts do not sum to total"));
            }
            rows.push((cols[0].to_string(), per_region));
        }
        if rows.len() != n_words {
            return Err(bad("word count mismatch"));
        }
        Ok(Vocabulary::from_rows(regions, rows, min_count))
    }

    fn from_rows(regions: Vec<RegionId>, mut rows: Vec<(String, Vec<u64>)>, min_count: u64) -> Self {
        rows.sort_by(|a, b| {
            let ca: u64 = a.1.iter().sum();
            let cb: u64 = b.1.iter().sum();
            cb.cmp(&ca).then_with(|| a.0.cmp(&b.0))
        });
        let n_regions = regions.len();
        let mut words = Vec::with_capacity(rows.len());
        let mut counts = Vec::with_capacity(rows.len());
        let mut region_counts = Vec::with_capacity(rows.len() * n_regions);
        let mut region_totals = vec![0u64; n_regions];
        for (word, per_region) in rows {
            counts.push(per_region.iter().sum());
            for (r, c) in per_region.into_iter().enumerate() {
                region_totals[r] += c;
                region_counts.push(c);
            }
            words.push(word);
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary {
            words,
            index,
            regions,
            counts,
            region_counts,
            region_totals,
            min_count,
        }
    }
}

/// Accumulates counts from a document stream. Builders over disjoint shards
/// can be merged; merging is plain addition.
#[derive(Debug, Clone, Default)]
pub struct VocabularyBuilder {
    regions: Vec<RegionId>,
    counts: HashMap<String, Vec<u64>>,
    documents: usize,
}

impl VocabularyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fixes the region order; regions seen later are appended.
    pub fn with_regions(regions: impl IntoIterator<Item = RegionId>) -> Self {
        let mut b = Self::default();
        for r in regions {
            b.region_slot(&r);
        }
        b
    }

    fn region_slot(&mut self, region: &RegionId) -> usize {
        match self.regions.iter().position(|r| r == region) {
            Some(i) => i,
            None => {
                self.regions.push(region.clone());
                for v in self.counts.values_mut() {
                    v.push(0);
                }
                self.regions.len() - 1
            }
        }
    }

    pub fn add(&mut self, doc: &Document) {
        let r = self.region_slot(&doc.region);
        let n = self.regions.len();
        for tok in &doc.tokens {
            let slot = self
                .counts
                .entry(tok.clone())
                .or_insert_with(|| vec![0; n]);
            slot[r] += doc.weight;
        }
        self.documents += 1;
    }

    pub fn merge(mut self, other: VocabularyBuilder) -> Self {
        let map: Vec<usize> = other.regions.iter().map(|r| self.region_slot(r)).collect();
        let n = self.regions.len();
        for (word, per_region) in other.counts {
            let slot = self.counts.entry(word).or_insert_with(|| vec![0; n]);
            for (r, c) in per_region.into_iter().enumerate() {
                slot[map[r]] += c;
            }
        }
        self.documents += other.documents;
        self
    }

    pub fn finish(self, min_count: u64) -> Result<Vocabulary> {
        if self.documents == 0 {
            return Err(Error::EmptyCorpus);
        }
        if self.regions.len() < 2 {
            log::warn!(
                "corpus has {} region(s); pairwise analysis needs at least 2",
                self.regions.len()
            );
        }
        let rows = self
            .counts
            .into_iter()
            .filter(|(_, c)| c.iter().sum::<u64>() >= min_count)
            .collect();
        Ok(Vocabulary::from_rows(self.regions, rows, min_count))
    }
}

/// Counts every token (times the document weight) and keeps words seen at
/// least `min_count` times.
pub fn build_vocabulary<'a, I>(docs: I, min_count: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut builder = VocabularyBuilder::new();
    for doc in docs {
        builder.add(doc);
    }
    builder.finish(min_count.max(1))
}

/// Relative frequency of `word` among the retained tokens of `region`.
pub fn word_probability(vocab: &Vocabulary, word: &str, region: &str) -> Result<f64> {
    let w = vocab.word_index(word)?;
    let r = vocab.region_index(region)?;
    let total = vocab.total_tokens(r);
    if total == 0 {
        return Ok(0.0);
    }
    Ok(vocab.region_count(w, r) as f64 / total as f64)
}
