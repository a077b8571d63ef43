//! Label-permutation null model, bootstrap confidence intervals and the
//! two-part significance verdict.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{build_vocabulary, Document, Vocabulary};
use crate::embed::{train_encoded, EmbeddingModel, EncodedCorpus, TrainingConfig};
use crate::error::{Error, Result};
use crate::scoring::{population_stats, raw_scores, score_table, ScoreTable};

/// Reassigns the documents' region labels by a uniform random permutation.
/// Tokens, weights and slices stay with their documents.
pub fn permute_labels<R: Rng + ?Sized>(docs: &[Document], rng: &mut R) -> Vec<Document> {
    let mut labels: Vec<_> = docs.iter().map(|d| d.region.clone()).collect();
    labels.shuffle(rng);
    docs.iter()
        .zip(labels)
        .map(|(d, region)| Document { region, ..d.clone() })
        .collect()
}

/// Same permutation as [`permute_labels`] for the same RNG state, on label indices.
pub fn permute_label_indices<R: Rng + ?Sized>(labels: &[usize], rng: &mut R) -> Vec<usize> {
    let mut out = labels.to_vec();
    out.shuffle(rng);
    out
}

/// Percentile of a sorted list with linear interpolation at rank `1 + (n-1)p`.
pub fn percentile(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::InvalidArgument("percentile of an empty list".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("percentile level {p} outside [0, 1]")));
    }
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// `(LCI, HCI)`: the `1 - alpha` and `alpha` percentiles of sorted null scores.
pub fn confidence_interval(sorted: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0.5, 1), got {alpha}")));
    }
    Ok((percentile(sorted, 1.0 - alpha)?, percentile(sorted, alpha)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Significant,
    NotSignificant,
    Unscorable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Significant => "significant",
            Verdict::NotSignificant => "not-significant",
            Verdict::Unscorable => "unscorable",
        })
    }
}

impl std::str::FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "significant" => Ok(Verdict::Significant),
            "not-significant" => Ok(Verdict::NotSignificant),
            "unscorable" => Ok(Verdict::Unscorable),
            other => Err(Error::Format(format!("unknown verdict {other:?}"))),
        }
    }
}

/// Significant iff the standardized score reaches `beta` and the effect lies
/// strictly above the interval. The lower bound does not enter the decision.
pub fn verdict(effect: f64, z: f64, _lci: f64, hci: f64, beta: f64) -> Verdict {
    if z >= beta && effect > hci {
        Verdict::Significant
    } else {
        Verdict::NotSignificant
    }
}

/// How the Z threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaRule {
    /// A fixed Z value.
    Absolute(f64),
    /// Percentile of the observed Z values of the scorable words.
    ObservedPercentile(f64),
    /// Percentile of the Z values the null runs produce, each run
    /// standardized over the same scorable words and then pooled.
    NullPercentile(f64),
}

impl Default for BetaRule {
    fn default() -> Self {
        BetaRule::NullPercentile(0.95)
    }
}

impl fmt::Display for BetaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaRule::Absolute(z) => write!(f, "abs:{z}"),
            BetaRule::ObservedPercentile(p) => write!(f, "observed:{p}"),
            BetaRule::NullPercentile(p) => write!(f, "null:{p}"),
        }
    }
}

impl std::str::FromStr for BetaRule {
    type Err = Error;

    /// `abs:3`, `observed:0.95`, `null:0.95`; a bare number is absolute.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad beta rule {s:?}"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let level = |v: &str| {
            let p = num(v)?;
            if (0.0..=1.0).contains(&p) { Ok(p) } else { Err(bad()) }
        };
        match s.split_once(':') {
            Some(("abs", v)) => Ok(BetaRule::Absolute(num(v)?)),
            Some(("observed", v)) => Ok(BetaRule::ObservedPercentile(level(v)?)),
            Some(("null", v)) => Ok(BetaRule::NullPercentile(level(v)?)),
            Some(_) => Err(bad()),
            None => Ok(BetaRule::Absolute(num(s)?)),
        }
    }
}

/// Per-word null scores from `B` retrainings on permuted labels.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDistribution {
    pub region_i: String,
    pub region_j: String,
    pub words: Vec<String>,
    /// `runs[b][w]`: raw score of word `w` in run `b`.
    pub runs: Vec<Vec<f64>>,
    /// Seed used for both the permutation and the training of each run.
    pub seeds: Vec<u64>,
    sorted: Vec<Vec<f64>>,
}

impl NullDistribution {
    pub fn from_runs(
        region_i: &str,
        region_j: &str,
        words: Vec<String>,
        runs: Vec<Vec<f64>>,
        seeds: Vec<u64>,
    ) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::InvalidArgument("null distribution needs at least one run".into()));
        }
        if runs.iter().any(|r| r.len() != words.len()) || seeds.len() != runs.len() {
            return Err(Error::LengthMismatch(words.len(), runs[0].len()));
        }
        let sorted = (0..words.len())
            .map(|w| {
                let mut v: Vec<f64> = runs.iter().map(|r| r[w]).collect();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        Ok(NullDistribution {
            region_i: region_i.to_string(),
            region_j: region_j.to_string(),
            words,
            runs,
            seeds,
            sorted,
        })
    }

    pub fn bootstrap(&self) -> usize {
        self.runs.len()
    }

    /// Sorted null scores of word index `w`.
    pub fn scores(&self, w: usize) -> &[f64] {
        &self.sorted[w]
    }

    pub fn scores_of(&self, word: &str) -> Option<&[f64]> {
        self.words.iter().position(|x| x == word).map(|w| self.scores(w))
    }

    /// Every run's scores standardized over the words flagged in `mask`, pooled.
    pub fn pooled_z(&self, mask: &[bool]) -> Result<Vec<f64>> {
        let mut pooled = Vec::new();
        for run in &self.runs {
            let pop: Vec<f64> = run.iter().zip(mask).filter(|(_, &m)| m).map(|(x, _)| *x).collect();
            let (mean, std) = population_stats(&pop)?;
            pooled.extend(pop.iter().map(|x| (x - mean) / std));
        }
        Ok(pooled)
    }
}

/// Trains one null model: labels permuted and weights initialized with `seed`.
pub fn null_run(
    corpus: &EncodedCorpus,
    vocab: &Arc<Vocabulary>,
    config: &TrainingConfig,
    seed: u64,
) -> Result<EmbeddingModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = permute_label_indices(corpus.labels(), &mut rng);
    let config = TrainingConfig {
        seed,
        threads: 1,
        ..config.clone()
    };
    train_encoded(&corpus.with_labels(labels), Arc::clone(vocab), config)
}

/// Runs `b = 1..=B` use seed `master_seed + b`. The vocabulary stays frozen;
/// every vocabulary word is scored in every run.
pub fn estimate_null(
    corpus: &EncodedCorpus,
    vocab: Arc<Vocabulary>,
    pair: (&str, &str),
    bootstrap: usize,
    config: &TrainingConfig,
    master_seed: u64,
) -> Result<NullDistribution> {
    if bootstrap == 0 {
        return Err(Error::InvalidArgument("bootstrap count must be >= 1".into()));
    }
    let seeds: Vec<u64> = (1..=bootstrap as u64).map(|b| master_seed.wrapping_add(b)).collect();
    let runs = seeds
        .par_iter()
        .enumerate()
        .map(|(b, &seed)| {
            log::info!("null run {}/{} (seed {seed})", b + 1, bootstrap);
            null_run(corpus, &vocab, config, seed)
                .and_then(|m| raw_scores(&m, pair.0, pair.1))
                .map_err(|e| Error::NullRun {
                    run: b + 1,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    NullDistribution::from_runs(pair.0, pair.1, vocab.words().to_vec(), runs, seeds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub word: String,
    pub effect: f64,
    pub z: f64,
    pub lci: f64,
    pub hci: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceReport {
    pub region_i: String,
    pub region_j: String,
    pub bootstrap: usize,
    pub alpha: f64,
    pub beta_rule: BetaRule,
    /// Resolved Z threshold.
    pub beta: f64,
    pub seeds: Vec<u64>,
    pub rows: Vec<ReportRow>,
}

impl SignificanceReport {
    pub fn significant(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Significant)
    }

    pub fn row(&self, word: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.word == word)
    }
}

/// Resolves the Z threshold for an observed table and its null distribution.
pub fn resolve_beta(rule: BetaRule, observed: &ScoreTable, null: &NullDistribution) -> Result<f64> {
    match rule {
        BetaRule::Absolute(z) => Ok(z),
        BetaRule::ObservedPercentile(p) => {
            let mut zs: Vec<f64> = observed.scorable().map(|s| s.z).collect();
            zs.sort_by(f64::total_cmp);
            percentile(&zs, p)
        }
        BetaRule::NullPercentile(p) => {
            let mask: Vec<bool> = observed.scores.iter().map(|s| s.scorable).collect();
            let mut zs = null.pooled_z(&mask)?;
            zs.sort_by(f64::total_cmp);
            percentile(&zs, p)
        }
    }
}

pub fn significance_report(
    observed: &ScoreTable,
    null: &NullDistribution,
    alpha: f64,
    beta_rule: BetaRule,
) -> Result<SignificanceReport> {
    let obs: BTreeSet<&str> = observed.scores.iter().map(|s| s.word.as_str()).collect();
    let nul: BTreeSet<&str> = null.words.iter().map(String::as_str).collect();
    if obs != nul || observed.len() != null.words.len() {
        let only = |a: &BTreeSet<&str>, b: &BTreeSet<&str>| a.difference(b).map(|s| s.to_string()).collect();
        return Err(Error::WordSetMismatch {
            only_observed: only(&obs, &nul),
            only_null: only(&nul, &obs),
        });
    }
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0.5, 1), got {alpha}")));
    }
    let beta = resolve_beta(beta_rule, observed, null)?;
    let rows = observed
        .scores
        .iter()
        .map(|s| {
            let w = null.words.iter().position(|x| *x == s.word).expect("word sets checked above");
            let (lci, hci) = confidence_interval(null.scores(w), alpha)?;
            let verdict = if s.scorable {
                verdict(s.raw, s.z, lci, hci, beta)
            } else {
                Verdict::Unscorable
            };
            Ok(ReportRow {
                word: s.word.clone(),
                effect: s.raw,
                z: s.z,
                lci,
                hci,
                verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SignificanceReport {
        region_i: observed.region_i.clone(),
        region_j: observed.region_j.clone(),
        bootstrap: null.bootstrap(),
        alpha,
        beta_rule,
        beta,
        seeds: null.seeds.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceConfig {
    /// Null-model retrainings.
    pub bootstrap: usize,
    pub alpha: f64,
    pub beta: BetaRule,
    /// Per-region count a word needs to enter the Z population.
    pub min_count: u64,
    /// Vocabulary threshold on total counts.
    pub vocab_min_count: u64,
    /// Training settings; `seed` is the master seed of the run.
    pub training: TrainingConfig,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        SignificanceConfig {
            bootstrap: 20,
            alpha: 0.95,
            beta: BetaRule::default(),
            min_count: 1,
            vocab_min_count: crate::corpus::DEFAULT_MIN_COUNT,
            training: TrainingConfig::default(),
        }
    }
}

/// Everything one run of the pipeline produces for a region pair.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub model: EmbeddingModel,
    pub table: ScoreTable,
    pub null: NullDistribution,
    pub report: SignificanceReport,
}

/// Observed model trained from an existing vocabulary, then scored against
/// its null distribution.
pub fn analyze_with_model(
    model: EmbeddingModel,
    docs: &[Document],
    pair: (&str, &str),
    config: &SignificanceConfig,
) -> Result<Analysis> {
    let vocab = model.shared_vocabulary();
    let corpus = EncodedCorpus::new(docs, &vocab)?;
    let table = score_table(&model, pair.0, pair.1, config.min_count)?;
    let training = model.config().clone();
    let null = estimate_null(&corpus, vocab, pair, config.bootstrap, &training, training.seed)?;
    let report = significance_report(&table, &null, config.alpha, config.beta)?;
    Ok(Analysis {
        model,
        table,
        null,
        report,
    })
}

/// Full pipeline: vocabulary, observed training with the master seed, scoring,
/// null model and report.
pub fn analyze(docs: &[Document], pair: (&str, &str), config: &SignificanceConfig) -> Result<Analysis> {
    if pair.0 == pair.1 {
        return Err(Error::SameRegion(pair.0.to_string()));
    }
    let vocab = Arc::new(build_vocabulary(docs, config.vocab_min_count)?);
    vocab.region_index(pair.0)?;
    vocab.region_index(pair.1)?;
    let corpus = EncodedCorpus::new(docs, &vocab)?;
    let training = TrainingConfig {
        threads: 1,
        ..config.training.clone()
    };
    log::info!("observed run (seed {})", training.seed);
    let model = train_encoded(&corpus, vocab, training)?;
    analyze_with_model(model, docs, pair, config)
}

pub fn write_report_tsv<W: Write>(mut out: W, report: &SignificanceReport) -> Result<()> {
    writeln!(out, "# region_i={}", report.region_i)?;
    writeln!(out, "# region_j={}", report.region_j)?;
    writeln!(out, "# bootstrap={}", report.bootstrap)?;
    writeln!(out, "# alpha={}", report.alpha)?;
    writeln!(out, "# beta_rule={}", report.beta_rule)?;
    writeln!(out, "# beta={}", report.beta)?;
    let seeds: Vec<String> = report.seeds.iter().map(u64::to_string).collect();
    writeln!(out, "# seeds={}", seeds.join(","))?;
    writeln!(out, "# geodist {}: word\tE\tZ\tLCI\tHCI\tverdict", crate::VERSION)?;
    for r in &report.rows {
        writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", r.word, r.effect, r.z, r.lci, r.hci, r.verdict)?;
    }
    Ok(())
}

/// Reads a report written by [`write_report_tsv`].
pub fn read_report_tsv<R: std::io::BufRead>(input: R) -> Result<SignificanceReport> {
    let mut report = SignificanceReport {
        region_i: String::new(),
        region_j: String::new(),
        bootstrap: 0,
        alpha: 0.0,
        beta_rule: BetaRule::default(),
        beta: 0.0,
        seeds: Vec::new(),
        rows: Vec::new(),
    };
    let bad = |what: &str| Error::Format(format!("report: bad {what}"));
    for line in input.lines() {
        let line = line?;
        if let Some(kv) = line.strip_prefix("# ") {
            let Some((k, v)) = kv.split_once('=') else { continue };
            match k {
                "region_i" => report.region_i = v.to_string(),
                "region_j" => report.region_j = v.to_string(),
                "bootstrap" => report.bootstrap = v.parse().map_err(|_| bad(k))?,
                "alpha" => report.alpha = v.parse().map_err(|_| bad(k))?,
                "beta_rule" => report.beta_rule = v.parse()?,
                "beta" => report.beta = v.parse().map_err(|_| bad(k))?,
                "seeds" if !v.is_empty() => {
                    report.seeds = v.split(',').map(|s| s.parse().map_err(|_| bad(k))).collect::<Result<_>>()?
                }
                _ => {}
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(bad("row"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("number"));
        report.rows.push(ReportRow {
            word: f[0].to_string(),
            effect: num(f[1])?,
            z: num(f[2])?,
            lci: num(f[3])?,
            hci: num(f[4])?,
            verdict: f[5].parse()?,
        });
    }
    Ok(report)
}

/// Null-score histogram data for one word: each null score on its own row,
/// followed by the observed score.
pub fn write_null_histogram<W: Write>(
    mut out: W,
    word: &str,
    null: &NullDistribution,
    report: &SignificanceReport,
) -> Result<()> {
    let scores = null
        .scores_of(word)
        .ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    let row = report.row(word).ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    writeln!(out, "# geodist {}: word,kind,score,lci,hci", crate::VERSION)?;
    for s in scores {
        writeln!(out, "{word},null,{s},{},{}", row.lci, row.hci)?;
    }
    writeln!(out, "{word},observed,{},{},{}", row.effect, row.lci, row.hci)?;
    Ok(())
}

/// Null runs in long format: `run,seed,word,score`.
pub fn write_null_tsv<W: Write>(mut out: W, null: &NullDistribution) -> Result<()> {
    writeln!(out, "# geodist {}: run\tseed\tword\tscore", crate::VERSION)?;
    for (b, (run, seed)) in null.runs.iter().zip(&null.seeds).enumerate() {
        for (w, s) in null.words.iter().zip(run) {
            writeln!(out, "{}\t{seed}\t{w}\t{s}", b + 1)?;
        }
    }
    Ok(())
}

pub fn read_null_tsv<R: std::io::BufRead>(input: R, pair: (&str, &str)) -> Result<NullDistribution> {
    let bad = || Error::Format("null scores: bad row".into());
    let mut words: Vec<String> = Vec::new();
    let mut runs: Vec<Vec<f64>> = Vec::new();
    let mut seeds = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let run: usize = f[0].parse().map_err(|_| bad())?;
        if run == runs.len() + 1 {
            runs.push(Vec::new());
            seeds.push(f[1].parse().map_err(|_| bad())?);
        } else if run != runs.len() {
            return Err(bad());
        }
        if run == 1 {
            words.push(f[2].to_string());
        } else if words.get(runs[run - 1].len()).map(String::as_str) != Some(f[2]) {
            return Err(bad());
        }
        runs[run - 1].push(f[3].parse().map_err(|_| bad())?);
    }
    NullDistribution::from_runs(pair.0, pair.1, words, runs, seeds)
}
