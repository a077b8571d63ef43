//! Cosine distances between a word's regional vectors, standardized across words.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::embed::EmbeddingModel;
use crate::error::{Error, Result};

/// `1 - u·v / (|u| |v|)`, clamped to `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((1.0 - uv / (uu * vv).sqrt()).clamp(0.0, 2.0))
}

fn distance_idx(model: &EmbeddingModel, w: usize, i: usize, j: usize) -> Result<f64> {
    let (a, b) = (model.embedding(w, i), model.embedding(w, j));
    cosine_distance(&a, &b).map_err(|e| match e {
        Error::ZeroVector => {
            let zero_in = if a.iter().all(|&x| x == 0.0) { i } else { j };
            Error::ZeroEmbedding {
                word: model.vocabulary().word(w).to_string(),
                region: model.regions()[zero_in].to_string(),
            }
        }
        other => other,
    })
}

/// Cosine distance between the word's vectors in `ri` and `rj`.
pub fn distance_score(model: &EmbeddingModel, word: &str, ri: &str, rj: &str) -> Result<f64> {
    let w = model.word_index(word)?;
    let i = model.region_index(ri)?;
    let j = model.region_index(rj)?;
    // evaluated in a fixed region order so the score is exactly symmetric
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    distance_idx(model, w, a, b)
}

/// Raw distances for every vocabulary word, in vocabulary order.
pub fn raw_scores(model: &EmbeddingModel, ri: &str, rj: &str) -> Result<Vec<f64>> {
    let i = model.region_index(ri)?;
    let j = model.region_index(rj)?;
    if i == j {
        return Err(Error::SameRegion(ri.to_string()));
    }
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    (0..model.vocabulary().len())
        .into_par_iter()
        .map(|w| distance_idx(model, w, a, b))
        .collect()
}

/// Mean and population standard deviation (divisor `n`).
pub fn population_stats(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::DegeneratePopulation(format!(
            "{} scored words, need at least 2",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    // rounding in the mean can leave a tiny spread among identical values
    let spread = std <= 4.0 * f64::EPSILON * mean.abs();
    if std.is_nan() || std <= 0.0 || !std.is_finite() || spread || values.iter().all(|&x| x == values[0]) {
        return Err(Error::DegeneratePopulation("all scores are equal".into()));
    }
    Ok((mean, std))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawScore {
    pub word: String,
    pub raw: f64,
    /// Counted towards the standardization population.
    pub scorable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordScore {
    pub word: String,
    pub raw: f64,
    /// Standardized with the population statistics; also filled in for
    /// words outside the population.
    pub z: f64,
    pub scorable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub region_i: String,
    pub region_j: String,
    pub scores: Vec<WordScore>,
    pub mean: f64,
    pub std: f64,
    index: HashMap<String, usize>,
}

impl ScoreTable {
    pub fn get(&self, word: &str) -> Option<&WordScore> {
        self.index.get(word).map(|&i| &self.scores[i])
    }

    pub fn z(&self, word: &str) -> Option<f64> {
        self.get(word).map(|s| s.z)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scorable(&self) -> impl Iterator<Item = &WordScore> {
        self.scores.iter().filter(|s| s.scorable)
    }

    /// Z of a held-out raw score under this table's population.
    pub fn standardize_value(&self, raw: f64) -> f64 {
        (raw - self.mean) / self.std
    }
}

/// Standardizes raw scores over the scorable entries.
pub fn standardize(region_i: &str, region_j: &str, raw: Vec<RawScore>) -> Result<ScoreTable> {
    let population: Vec<f64> = raw.iter().filter(|r| r.scorable).map(|r| r.raw).collect();
    let (mean, std) = population_stats(&population)?;
    let scores: Vec<WordScore> = raw
        .into_iter()
        .map(|r| WordScore {
            z: (r.raw - mean) / std,
            word: r.word,
            raw: r.raw,
            scorable: r.scorable,
        })
        .collect();
    let index = scores
        .iter()
        .enumerate()
        .map(|(i, s)| (s.word.clone(), i))
        .collect();
    Ok(ScoreTable {
        region_i: region_i.to_string(),
        region_j: region_j.to_string(),
        scores,
        mean,
        std,
        index,
    })
}

/// Which words enter the standardization population: those seen at least
/// `min_count` times (and at least once) in each of the two regions.
pub fn scorable_mask(model: &EmbeddingModel, ri: &str, rj: &str, min_count: u64) -> Result<Vec<bool>> {
    let vocab = model.vocabulary();
    let i = vocab.region_index(ri)?;
    let j = vocab.region_index(rj)?;
    let floor = min_count.max(1);
    Ok((0..vocab.len())
        .map(|w| vocab.region_count(w, i) >= floor && vocab.region_count(w, j) >= floor)
        .collect())
}

/// Scores every vocabulary word of a trained model for one region pair.
pub fn score_table(model: &EmbeddingModel, ri: &str, rj: &str, min_count: u64) -> Result<ScoreTable> {
    let raw = raw_scores(model, ri, rj)?;
    let mask = scorable_mask(model, ri, rj, min_count)?;
    let vocab = model.vocabulary();
    let entries = raw
        .into_iter()
        .zip(mask)
        .enumerate()
        .map(|(w, (raw, scorable))| RawScore {
            word: vocab.word(w).to_string(),
            raw,
            scorable,
        })
        .collect();
    standardize(ri, rj, entries)
}

pub fn write_score_tsv<W: Write>(mut out: W, table: &ScoreTable) -> Result<()> {
    writeln!(
        out,
        "# geodist {}: word\tregion_i\tregion_j\traw\tz\tscorable",
        crate::VERSION
    )?;
    for s in &table.scores {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            s.word, table.region_i, table.region_j, s.raw, s.z, s.scorable as u8
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(values: &[f64]) -> Vec<RawScore> {
        values
            .iter()
            .enumerate()
            .map(|(i, &raw)| RawScore {
                word: format!("w{i}"),
                raw,
                scorable: true,
            })
            .collect()
    }

    #[test]
    fn trivial_distances() {
        assert_eq!(cosine_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[1.0, -2.0], &[-1.0, 2.0]).unwrap(), 2.0);
        assert!(matches!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
        assert!(matches!(cosine_distance(&[1.0], &[1.0, 0.0]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn two_point_population() {
        let t = standardize("US", "UK", raw(&[0.1, 0.3])).unwrap();
        assert!((t.scores[0].z + 1.0).abs() < 1e-12);
        assert!((t.scores[1].z - 1.0).abs() < 1e-12);
        assert!((t.mean - 0.2).abs() < 1e-15);
        assert!((t.std - 0.1).abs() < 1e-15);
    }

    #[test]
    fn degenerate_population() {
        assert!(matches!(
            standardize("US", "UK", raw(&[0.4, 0.4, 0.4])),
            Err(Error::DegeneratePopulation(_))
        ));
        assert!(matches!(standardize("US", "UK", raw(&[0.4])), Err(Error::DegeneratePopulation(_))));
    }

    #[test]
    fn unscorable_words_outside_population() {
        let mut r = raw(&[0.1, 0.3, 5.0]);
        r[2].scorable = false;
        let t = standardize("US", "UK", r).unwrap();
        assert!((t.mean - 0.2).abs() < 1e-15);
        assert!((t.z("w2").unwrap() - 48.0).abs() < 1e-9);
        assert_eq!(t.scorable().count(), 2);
        assert_eq!(t.standardize_value(0.3), t.z("w1").unwrap());
    }

    #[test]
    fn shift_invariance() {
        let a = standardize("US", "UK", raw(&[0.1, 0.5, 0.2, 0.9])).unwrap();
        let b = standardize("US", "UK", raw(&[1.1, 1.5, 1.2, 1.9])).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            assert!((x.z - y.z).abs() < 1e-9);
        }
    }
}
