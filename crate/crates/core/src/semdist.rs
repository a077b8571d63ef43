//! Semantic distance between two regions over time: the mean standardized
//! score of the words that changed significantly in every slice.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;

use crate::corpus::{split_by_slice, Document};
use crate::error::{Error, Result};
use crate::scoring::ScoreTable;
use crate::significance::{analyze, Analysis, SignificanceConfig, SignificanceReport, Verdict};

/// Words judged significant in one report.
pub fn changed_word_set(report: &SignificanceReport) -> BTreeSet<String> {
    report
        .rows
        .iter()
        .filter(|r| r.verdict == Verdict::Significant)
        .map(|r| r.word.clone())
        .collect()
}

/// Intersection of the changed sets of all reports.
pub fn stable_changed_set<'a>(reports: impl IntoIterator<Item = &'a SignificanceReport>) -> Result<BTreeSet<String>> {
    let mut sets = reports.into_iter().map(changed_word_set);
    let first = sets
        .next()
        .ok_or_else(|| Error::InvalidArgument("need at least one slice".into()))?;
    let stable = sets.fold(first, |acc, s| acc.intersection(&s).cloned().collect());
    if stable.is_empty() {
        log::warn!("no word changed significantly in every slice; semantic distance is undefined");
    }
    Ok(stable)
}

/// Mean Z over `words`. Z values are summed in sorted order so the result does
/// not depend on how `words` is enumerated.
pub fn semantic_distance<'a>(table: &ScoreTable, words: impl IntoIterator<Item = &'a String>) -> Result<f64> {
    let mut zs = words
        .into_iter()
        .map(|w| table.z(w).ok_or_else(|| Error::MissingScore(w.clone())))
        .collect::<Result<Vec<f64>>>()?;
    if zs.is_empty() {
        return Err(Error::NoStableWords);
    }
    zs.sort_by(f64::total_cmp);
    Ok(zs.iter().sum::<f64>() / zs.len() as f64)
}

#[derive(Debug, Clone)]
pub struct SliceAnalysis {
    pub slice: String,
    pub analysis: Analysis,
}

#[derive(Debug, Clone)]
pub struct DistanceSeries {
    pub region_i: String,
    pub region_j: String,
    pub slices: Vec<SliceAnalysis>,
    pub stable: BTreeSet<String>,
    /// `None` when the stable set is empty.
    pub sem: Vec<Option<f64>>,
}

/// Builds the series from already analysed slices, in the given order.
pub fn assemble_series(region_i: &str, region_j: &str, slices: Vec<SliceAnalysis>) -> Result<DistanceSeries> {
    let stable = stable_changed_set(slices.iter().map(|s| &s.analysis.report))?;
    let sem = slices
        .iter()
        .map(|s| {
            if stable.is_empty() {
                Ok(None)
            } else {
                semantic_distance(&s.analysis.table, &stable).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DistanceSeries {
        region_i: region_i.to_string(),
        region_j: region_j.to_string(),
        slices,
        stable,
        sem,
    })
}

/// Runs the full pipeline on each slice with one shared configuration.
///
/// Slices are taken in `order` when given, otherwise in order of first
/// appearance in `docs`.
pub fn distance_series(
    docs: &[Document],
    pair: (&str, &str),
    config: &SignificanceConfig,
    order: Option<&[String]>,
) -> Result<DistanceSeries> {
    let mut groups = split_by_slice(docs);
    if let Some(order) = order {
        let mut ordered = Vec::with_capacity(order.len());
        for label in order {
            let pos = groups
                .iter()
                .position(|(l, _)| l == label)
                .ok_or_else(|| Error::InvalidArgument(format!("slice {label:?} has no documents")))?;
            ordered.push(groups.swap_remove(pos));
        }
        groups = ordered;
    }
    if groups.len() < 2 {
        log::warn!("only {} slice(s); no trend can be read from the series", groups.len());
    }
    let slices = groups
        .par_iter()
        .map(|(label, docs)| {
            log::info!("slice {label}: {} documents", docs.len());
            analyze(docs, pair, config)
                .map(|analysis| SliceAnalysis {
                    slice: label.clone(),
                    analysis,
                })
                .map_err(|e| Error::Slice {
                    slice: label.clone(),
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_series(pair.0, pair.1, slices)
}

/// Sem over the stable set with one mean and standard deviation shared by all
/// slices, computed from the pooled scorable raw scores. Unlike the per-slice
/// values this keeps the slices on a common scale.
pub fn pooled_semantic_distances(series: &DistanceSeries) -> Result<Vec<f64>> {
    if series.stable.is_empty() {
        return Err(Error::NoStableWords);
    }
    let pooled: Vec<f64> = series
        .slices
        .iter()
        .flat_map(|s| s.analysis.table.scorable().map(|w| w.raw))
        .collect();
    let (mean, std) = crate::scoring::population_stats(&pooled)?;
    series
        .slices
        .iter()
        .map(|s| {
            let mut zs = series
                .stable
                .iter()
                .map(|w| {
                    let raw = s.analysis.table.get(w).ok_or_else(|| Error::MissingScore(w.clone()))?.raw;
                    Ok((raw - mean) / std)
                })
                .collect::<Result<Vec<f64>>>()?;
            zs.sort_by(f64::total_cmp);
            Ok(zs.iter().sum::<f64>() / zs.len() as f64)
        })
        .collect()
}

pub fn write_series_csv<W: Write>(mut out: W, series: &DistanceSeries) -> Result<()> {
    writeln!(out, "# geodist {}: slice,sem,stable_words", crate::VERSION)?;
    for (s, sem) in series.slices.iter().zip(&series.sem) {
        let sem = sem.map_or_else(|| "NA".to_string(), |v| v.to_string());
        writeln!(out, "{},{},{}", s.slice, sem, series.stable.len())?;
    }
    Ok(())
}

/// Z of every stable word in every slice.
pub fn write_trajectory_csv<W: Write>(mut out: W, series: &DistanceSeries) -> Result<()> {
    writeln!(out, "# geodist {}: slice,word,z", crate::VERSION)?;
    for s in &series.slices {
        for w in &series.stable {
            let z = s
                .analysis
                .table
                .z(w)
                .ok_or_else(|| Error::MissingScore(w.clone()))?;
            writeln!(out, "{},{},{}", s.slice, w, z)?;
        }
    }
    Ok(())
}
