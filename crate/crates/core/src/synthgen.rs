//! Synthetic two-token corpora with planted, size-controlled regional
//! differences in word contexts.

use std::collections::BTreeSet;
use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{Document, RegionId};
use crate::error::{Error, Result};
use crate::significance::{SignificanceReport, Verdict};

/// A word whose contexts differ in the perturbed regions.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedWord {
    /// Frequency rank of the word, `0` being the most frequent.
    pub word: usize,
    /// Probability that a context is drawn from the alternate set instead.
    pub effect: f64,
    /// Words the alternate contexts are drawn from, uniformly.
    pub alternate: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub vocab_size: usize,
    /// Word `i` is drawn as a center with weight `(i + 1)^-exponent`.
    pub exponent: f64,
    /// Consecutive ranks sharing a context distribution.
    pub block_size: usize,
    /// Share of base contexts drawn from the center frequency distribution
    /// instead of the block, so every word pair has some support.
    pub background: f64,
    pub planted: Vec<PlantedWord>,
    /// Small context differences on words that are not planted, standing in
    /// for the stable background variation between real dialects. Not
    /// counted as planted in the truth table.
    pub ambient: Vec<PlantedWord>,
    pub pairs_per_region: usize,
    /// The first region is the reference; every other region is perturbed.
    pub regions: Vec<RegionId>,
    pub seed: u64,
    /// Slice label stamped on every document.
    pub slice: Option<String>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            vocab_size: 100,
            exponent: 1.01,
            block_size: 10,
            background: 0.0,
            planted: Vec::new(),
            ambient: Vec::new(),
            pairs_per_region: 100_000,
            regions: vec![
                RegionId::new("A").expect("valid label"),
                RegionId::new("B").expect("valid label"),
            ],
            seed: 0,
            slice: None,
        }
    }
}

impl SyntheticSpec {
    pub fn blocks(&self) -> usize {
        self.vocab_size.div_ceil(self.block_size)
    }

    pub fn block_of(&self, word: usize) -> usize {
        word / self.block_size
    }

    /// Members of a block.
    pub fn block(&self, b: usize) -> std::ops::Range<usize> {
        b * self.block_size..((b + 1) * self.block_size).min(self.vocab_size)
    }

    /// Surface form of word rank `i`, zero-padded so text order equals rank order.
    pub fn word_name(&self, i: usize) -> String {
        let width = (self.vocab_size.max(2) - 1).to_string().len();
        format!("w{i:0width$}")
    }

    /// Plants `count` words with the same effect, chosen with `planting_seed`
    /// outside the most frequent block.
    ///
    /// With two or more planted words, each one's alternate set is the other
    /// planted words, so in the perturbed regions they form a cluster that
    /// co-occurs. A single planted word takes a random other block instead.
    pub fn plant(mut self, count: usize, effect: f64, planting_seed: u64) -> Result<Self> {
        let first = self.block_size.min(self.vocab_size);
        let candidates = self.vocab_size - first;
        if count > candidates {
            return Err(Error::InvalidArgument(format!(
                "cannot plant {count} words outside the first block of {first}"
            )));
        }
        let blocks = self.blocks();
        if blocks < 2 {
            return Err(Error::InvalidArgument("planting needs at least two blocks".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(planting_seed);
        let mut words: Vec<usize> = sample(&mut rng, candidates, count).into_iter().map(|i| i + first).collect();
        words.sort_unstable();
        self.planted = words
            .iter()
            .map(|&word| {
                let alternate = if count > 1 {
                    words.iter().copied().filter(|&w| w != word).collect()
                } else {
                    let own = self.block_of(word);
                    let mut alt = rng.gen_range(0..blocks - 1);
                    if alt >= own {
                        alt += 1;
                    }
                    self.block(alt).collect()
                };
                PlantedWord {
                    word,
                    effect,
                    alternate,
                }
            })
            .collect();
        Ok(self)
    }

    /// Gives every word that is not planted an effect drawn uniformly from
    /// `[0, max_effect]`, with contexts moving to a random other block.
    pub fn with_ambient(mut self, max_effect: f64, ambient_seed: u64) -> Result<Self> {
        let blocks = self.blocks();
        if blocks < 2 {
            return Err(Error::InvalidArgument("ambient variation needs at least two blocks".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(ambient_seed);
        let planted: BTreeSet<usize> = self.planted.iter().map(|p| p.word).collect();
        self.ambient = (0..self.vocab_size)
            .filter(|w| !planted.contains(w))
            .map(|word| {
                let own = self.block_of(word);
                let mut alt = rng.gen_range(0..blocks - 1);
                if alt >= own {
                    alt += 1;
                }
                PlantedWord {
                    word,
                    effect: max_effect * rng.gen::<f64>(),
                    alternate: self.block(alt).collect(),
                }
            })
            .collect();
        Ok(self)
    }

    /// Planted or ambient variation of `word`, if any.
    pub fn variation(&self, word: usize) -> Option<&PlantedWord> {
        self.planted
            .iter()
            .chain(&self.ambient)
            .find(|p| p.word == word)
    }

    /// Same planted words with a different effect size.
    pub fn with_effect(mut self, effect: f64) -> Self {
        self.planted.iter_mut().for_each(|p| p.effect = effect);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.vocab_size < 2 {
            return bad("vocabulary needs at least 2 words".into());
        }
        if self.block_size < 2 || self.block_size > self.vocab_size {
            return bad(format!("block size must lie in [2, {}]", self.vocab_size));
        }
        if self.vocab_size % self.block_size == 1 {
            return bad("the last block would hold a single word".into());
        }
        if !(0.0..=1.0).contains(&self.background) {
            return bad(format!("background share {} outside [0, 1]", self.background));
        }
        if !(self.exponent.is_finite() && self.exponent >= 0.0) {
            return bad(format!("invalid exponent {}", self.exponent));
        }
        if self.pairs_per_region == 0 {
            return bad("pairs per region must be >= 1".into());
        }
        if self.regions.is_empty() {
            return bad("at least one region is required".into());
        }
        if self.regions.iter().collect::<BTreeSet<_>>().len() != self.regions.len() {
            return bad("region labels must be distinct".into());
        }
        let mut seen = BTreeSet::new();
        for p in self.planted.iter().chain(&self.ambient) {
            if p.word >= self.vocab_size {
                return bad(format!("planted word {} outside the vocabulary", p.word));
            }
            if !seen.insert(p.word) {
                return bad(format!("word {} planted twice", p.word));
            }
            if !(0.0..=1.0).contains(&p.effect) {
                return bad(format!("effect {} outside [0, 1]", p.effect));
            }
            if p.alternate.is_empty() || p.alternate.iter().any(|&a| a >= self.vocab_size || a == p.word) {
                return bad(format!("invalid alternate set for word {}", p.word));
            }
        }
        Ok(())
    }

    /// Unnormalized center weights `(i + 1)^-exponent`.
    pub fn center_weights(&self) -> Vec<f64> {
        (0..self.vocab_size)
            .map(|i| ((i + 1) as f64).powf(-self.exponent))
            .collect()
    }

    /// Probability of each context word given `center` in a perturbed region,
    /// or in the reference region when `perturbed` is false.
    pub fn context_distribution(&self, center: usize, perturbed: bool) -> Vec<f64> {
        let mut probs = vec![0.0; self.vocab_size];
        let base = self.block(self.block_of(center));
        let others = base.len() - 1;
        let planted = self.variation(center);
        let e = match planted {
            Some(p) if perturbed => p.effect,
            _ => 0.0,
        };
        let lambda = self.background;
        for c in base.filter(|&c| c != center) {
            probs[c] += (1.0 - e) * (1.0 - lambda) / others as f64;
        }
        if lambda > 0.0 {
            let weights = self.center_weights();
            let total: f64 = weights.iter().sum();
            for (p, w) in probs.iter_mut().zip(&weights) {
                *p += (1.0 - e) * lambda * w / total;
            }
        }
        if let (Some(p), true) = (planted, e > 0.0) {
            let n = p.alternate.len() as f64;
            for &c in &p.alternate {
                probs[c] += e / n;
            }
        }
        probs
    }
}

fn sample_context<R: Rng>(
    spec: &SyntheticSpec,
    unigram: &WeightedIndex<f64>,
    variation: &[Option<&PlantedWord>],
    center: usize,
    perturbed: bool,
    rng: &mut R,
) -> usize {
    if perturbed {
        if let Some(p) = variation[center] {
            if rng.gen::<f64>() < p.effect {
                return p.alternate[rng.gen_range(0..p.alternate.len())];
            }
        }
    }
    if spec.background > 0.0 && rng.gen::<f64>() < spec.background {
        return unigram.sample(rng);
    }
    let base = spec.block(spec.block_of(center));
    // uniform over the other members of the block
    let mut c = rng.gen_range(base.start..base.end - 1);
    if c >= center {
        c += 1;
    }
    c
}

/// Emits `pairs_per_region` two-token documents `center context` per region.
/// Region `r` draws from its own stream of the seeded generator.
pub fn generate(spec: &SyntheticSpec) -> Result<Vec<Document>> {
    spec.validate()?;
    let weights = spec.center_weights();
    let centers = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let names: Vec<String> = (0..spec.vocab_size).map(|i| spec.word_name(i)).collect();
    let variation: Vec<Option<&PlantedWord>> = (0..spec.vocab_size).map(|i| spec.variation(i)).collect();
    let per_region: Vec<Vec<Document>> = spec
        .regions
        .par_iter()
        .enumerate()
        .map(|(r, region)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(r as u64 + 1);
            let perturbed = r > 0;
            (0..spec.pairs_per_region)
                .map(|_| {
                    let center = centers.sample(&mut rng);
                    let context = sample_context(spec, &centers, &variation, center, perturbed, &mut rng);
                    let doc = Document::new(region.clone(), vec![names[center].clone(), names[context].clone()]);
                    match &spec.slice {
                        Some(s) => doc.with_slice(s.clone()),
                        None => doc,
                    }
                })
                .collect()
        })
        .collect();
    Ok(per_region.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub word: String,
    pub planted: bool,
    pub effect: f64,
}

pub fn truth(spec: &SyntheticSpec) -> Vec<TruthRow> {
    (0..spec.vocab_size)
        .map(|i| {
            let planted = spec.planted.iter().any(|p| p.word == i);
            TruthRow {
                word: spec.word_name(i),
                planted,
                effect: spec.variation(i).map_or(0.0, |p| p.effect),
            }
        })
        .collect()
}

pub fn write_truth_tsv<W: Write>(mut out: W, truth: &[TruthRow]) -> Result<()> {
    writeln!(out, "# geodist {}: word\tplanted\teffect", crate::VERSION)?;
    for t in truth {
        writeln!(out, "{}\t{}\t{}", t.word, t.planted as u8, t.effect)?;
    }
    Ok(())
}

pub fn read_truth_tsv<R: std::io::BufRead>(input: R) -> Result<Vec<TruthRow>> {
    let bad = || Error::Format("truth: bad row".into());
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(bad());
        }
        out.push(TruthRow {
            word: f[0].to_string(),
            planted: match f[1] {
                "1" => true,
                "0" => false,
                _ => return Err(bad()),
            },
            effect: f[2].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorRates {
    pub false_positive_rate: f64,
    pub false_negative_rate: f64,
    pub false_positives: Vec<String>,
    pub missed: Vec<String>,
}

/// Compares a report's verdicts with the planted truth. Non-planted words count
/// towards the false-positive denominator only when scorable; planted words
/// that are unscorable count as missed.
pub fn evaluate_detector(truth: &[TruthRow], report: &SignificanceReport) -> DetectorRates {
    let (mut negatives, mut planted) = (0usize, 0usize);
    let mut false_positives = Vec::new();
    let mut missed = Vec::new();
    for t in truth {
        let verdict = report.row(&t.word).map(|r| r.verdict);
        if t.planted {
            planted += 1;
            if verdict != Some(Verdict::Significant) {
                missed.push(t.word.clone());
            }
        } else if matches!(verdict, Some(Verdict::Significant | Verdict::NotSignificant)) {
            negatives += 1;
            if verdict == Some(Verdict::Significant) {
                false_positives.push(t.word.clone());
            }
        }
    }
    let rate = |k: usize, n: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    DetectorRates {
        false_positive_rate: rate(false_positives.len(), negatives),
        false_negative_rate: rate(missed.len(), planted),
        false_positives,
        missed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::significance::{BetaRule, ReportRow};

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            vocab_size: 20,
            block_size: 5,
            pairs_per_region: 2000,
            seed: 4,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_and_sized() {
        let spec = small().plant(2, 0.5, 1).unwrap();
        let a = generate(&spec).unwrap();
        assert_eq!(a, generate(&spec).unwrap());
        assert_eq!(a.len(), 4000);
        assert!(a.iter().all(|d| d.tokens.len() == 2));
        let other = generate(&SyntheticSpec { seed: 5, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn planting_rules() {
        let spec = small().plant(3, 0.9, 7).unwrap();
        assert_eq!(spec.planted.len(), 3);
        for p in &spec.planted {
            assert!(p.word >= 5);
            assert_eq!(p.alternate.len(), 2);
            assert!(!p.alternate.contains(&p.word));
        }
        let single = small().plant(1, 0.9, 7).unwrap();
        let p = &single.planted[0];
        assert_eq!(p.alternate.len(), 5);
        assert!(p.alternate.iter().all(|&a| spec.block_of(a) != spec.block_of(p.word)));
        assert!(small().plant(16, 0.9, 7).is_err());
        let mut bad = spec.clone();
        bad.planted[0].effect = 1.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn full_effect_uses_only_alternate_set() {
        let spec = small().plant(1, 1.0, 3).unwrap();
        let p = spec.planted[0].clone();
        let name = spec.word_name(p.word);
        let alt: BTreeSet<String> = p.alternate.iter().map(|&i| spec.word_name(i)).collect();
        let docs = generate(&spec).unwrap();
        let mut seen = 0;
        for d in docs.iter().filter(|d| d.region.as_str() == "B" && d.tokens[0] == name) {
            assert!(alt.contains(&d.tokens[1]));
            seen += 1;
        }
        assert!(seen > 0);
        let dist = spec.context_distribution(p.word, true);
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detector_extremes() {
        let truth = vec![
            TruthRow { word: "a".into(), planted: true, effect: 1.0 },
            TruthRow { word: "b".into(), planted: false, effect: 0.0 },
            TruthRow { word: "c".into(), planted: false, effect: 0.0 },
        ];
        let report = |flags: [bool; 3]| SignificanceReport {
            region_i: "A".into(),
            region_j: "B".into(),
            bootstrap: 1,
            alpha: 0.95,
            beta_rule: BetaRule::Absolute(0.0),
            beta: 0.0,
            seeds: vec![1],
            rows: ["a", "b", "c"]
                .iter()
                .zip(flags)
                .map(|(w, f)| ReportRow {
                    word: w.to_string(),
                    effect: 0.0,
                    z: 0.0,
                    lci: 0.0,
                    hci: 0.0,
                    verdict: if f { Verdict::Significant } else { Verdict::NotSignificant },
                })
                .collect(),
        };
        let perfect = evaluate_detector(&truth, &report([true, false, false]));
        assert_eq!((perfect.false_positive_rate, perfect.false_negative_rate), (0.0, 0.0));
        let all = evaluate_detector(&truth, &report([true, true, true]));
        assert_eq!((all.false_positive_rate, all.false_negative_rate), (1.0, 0.0));
        let none = evaluate_detector(&truth, &report([false, false, false]));
        assert_eq!((none.false_positive_rate, none.false_negative_rate), (0.0, 1.0));
    }

    #[test]
    fn truth_round_trip() {
        let spec = small().plant(2, 0.25, 1).unwrap();
        let t = truth(&spec);
        let mut buf = Vec::new();
        write_truth_tsv(&mut buf, &t).unwrap();
        assert_eq!(read_truth_tsv(&buf[..]).unwrap(), t);
        assert_eq!(t.iter().filter(|r| r.planted).count(), 2);
    }
}
