//! Plot-ready tables. Rendering is left to the caller; every writer emits a
//! `#` header line naming the columns.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::freqdist::{frequency_score, Smoothing};

pub use crate::semdist::write_series_csv;
pub use crate::significance::write_null_histogram;
pub use crate::syndist::write_pos_bars;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlotKind {
    FreqScatter,
    PosBars,
    NullHist,
    SemdistSeries,
    Neighbors2d,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] = [
        PlotKind::FreqScatter,
        PlotKind::PosBars,
        PlotKind::NullHist,
        PlotKind::SemdistSeries,
        PlotKind::Neighbors2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::FreqScatter => "freq-scatter",
            PlotKind::PosBars => "pos-bars",
            PlotKind::NullHist => "null-hist",
            PlotKind::SemdistSeries => "semdist-series",
            PlotKind::Neighbors2d => "neighbors-2d",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown plot kind {s:?}")))
    }
}

/// Per-word relative frequencies in two regions, for a log-log scatter.
pub fn write_freq_scatter<W: Write>(
    mut out: W,
    vocab: &Vocabulary,
    ri: &str,
    rj: &str,
    smoothing: Smoothing,
) -> Result<()> {
    let (i, j) = (vocab.region_index(ri)?, vocab.region_index(rj)?);
    let (ti, tj) = (vocab.total_tokens(i).max(1) as f64, vocab.total_tokens(j).max(1) as f64);
    writeln!(
        out,
        "# geodist {}: word,count_i,count_j,p_i,p_j,delta",
        crate::VERSION
    )?;
    for (w, word) in vocab.words().iter().enumerate() {
        let (ci, cj) = (vocab.region_count(w, i), vocab.region_count(w, j));
        let delta = frequency_score(vocab, word, ri, rj, smoothing)?.delta;
        writeln!(
            out,
            "{word},{ci},{cj},{},{},{delta}",
            ci as f64 / ti,
            cj as f64 / tj
        )?;
    }
    Ok(())
}

/// A two-component principal-axes projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// One `[x, y]` per input point.
    pub coords: Vec<[f64; 2]>,
    /// Unit loading vectors of the two axes; the second is all zeros when the
    /// input has a single dimension.
    pub axes: [Vec<f64>; 2],
    /// Variance along each axis (population divisor).
    pub variance: [f64; 2],
}

/// Projects `points` onto their first two principal axes. Each axis is signed
/// so that its largest-magnitude loading is positive (first such index wins).
pub fn principal_axes(points: &[Vec<f64>]) -> Result<Projection> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {n}")));
    }
    let d = points[0].len();
    if d == 0 {
        return Err(Error::InvalidArgument("points have no dimensions".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::LengthMismatch(d, p.len()));
    }
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let x = DMatrix::from_fn(n, d, |r, c| points[r][c] - mean[c]);
    let cov = x.transpose() * &x / n as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let axis = |k: usize| -> (Vec<f64>, f64) {
        let Some(&col) = order.get(k) else {
            return (vec![0.0; d], 0.0);
        };
        let mut v: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
        let lead = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        (v, eig.eigenvalues[col].max(0.0))
    };
    let (a0, l0) = axis(0);
    let (a1, l1) = axis(1);
    let coords = (0..n)
        .map(|r| {
            let row = x.row(r);
            let proj = |a: &[f64]| row.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
            [proj(&a0), proj(&a1)]
        })
        .collect();
    Ok(Projection {
        coords,
        axes: [a0, a1],
        variance: [l0, l1],
    })
}

/// A labelled vector for the neighbors projection.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledVector {
    pub word: String,
    pub region: String,
    pub vector: Vec<f64>,
}

pub fn write_neighbors_2d<W: Write>(mut out: W, points: &[LabelledVector]) -> Result<Projection> {
    let vectors: Vec<Vec<f64>> = points.iter().map(|p| p.vector.clone()).collect();
    let proj = principal_axes(&vectors)?;
    writeln!(out, "# geodist {}: word,region,x,y", crate::VERSION)?;
    for (p, [x, y]) in points.iter().zip(&proj.coords) {
        writeln!(out, "{},{},{x},{y}", p.word, p.region)?;
    }
    Ok(proj)
}
