//! Cluster diagnostics on subspace coordinates.
//!
//! Samples sharing a style form a cluster. The battery measures how far
//! apart clusters are (Jensen-Shannon distance between their coordinate
//! histograms), how well separated they are (silhouette), and how much of
//! that structure is explained by content: silhouette is re-measured after
//! z-scoring each content group, and a large gain flags entanglement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::ScoreDataset;
use crate::error::{Error, Result};
use crate::subspace::{project_coords, ConceptSubspace};

pub const DEFAULT_BINS: usize = 32;
pub const DEFAULT_SMOOTHING: f64 = 1e-9;
/// Fraction of the joint coordinate range added to each side of the histogram.
pub const HISTOGRAM_MARGIN: f64 = 0.05;
/// Standard deviations below this are treated as zero by normalisation.
pub const MIN_STD: f64 = 1e-12;

/// Per-sample subspace coordinates with their style and content labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredCoords {
    coords: Vec<Vec<f64>>,
    styles: Vec<String>,
    contents: Vec<String>,
    style_of: Vec<usize>,
    content_of: Vec<usize>,
    replicates: Vec<u32>,
}

impl ClusteredCoords {
    /// Builds from per-sample coordinates and label names. Label tables are
    /// ordered by first appearance.
    pub fn from_labeled<S: AsRef<str>, C: AsRef<str>>(
        coords: Vec<Vec<f64>>,
        styles: &[S],
        contents: &[C],
    ) -> Result<Self> {
        let n = coords.len();
        if styles.len() != n || contents.len() != n {
            return Err(Error::Shape(format!(
                "{n} coordinate rows but {} style and {} content labels",
                styles.len(),
                contents.len()
            )));
        }
        let (style_names, style_of) = index_labels(styles);
        let (content_names, content_of) = index_labels(contents);
        Self::new(coords, style_names, content_names, style_of, content_of, vec![0; n])
    }

    pub fn new(
        coords: Vec<Vec<f64>>,
        styles: Vec<String>,
        contents: Vec<String>,
        style_of: Vec<usize>,
        content_of: Vec<usize>,
        replicates: Vec<u32>,
    ) -> Result<Self> {
        let n = coords.len();
        if style_of.len() != n || content_of.len() != n || replicates.len() != n {
            return Err(Error::Shape("label vectors must match the number of samples".into()));
        }
        let k = coords.first().map_or(0, Vec::len);
        if coords.iter().any(|c| c.len() != k) {
            return Err(Error::Shape("coordinate rows have differing lengths".into()));
        }
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("coordinates must be finite".into()));
        }
        if style_of.iter().any(|s| *s >= styles.len()) || content_of.iter().any(|c| *c >= contents.len()) {
            return Err(Error::Validation("label index out of range".into()));
        }
        Ok(Self {
            coords,
            styles,
            contents,
            style_of,
            content_of,
            replicates,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn k(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn style_labels(&self) -> &[String] {
        &self.styles
    }

    pub fn content_labels(&self) -> &[String] {
        &self.contents
    }

    pub fn style_of(&self, i: usize) -> &str {
        &self.styles[self.style_of[i]]
    }

    pub fn content_of(&self, i: usize) -> &str {
        &self.contents[self.content_of[i]]
    }

    pub fn replicate_of(&self, i: usize) -> u32 {
        self.replicates[i]
    }

    /// Keeps only the leading `dims` coordinates.
    pub fn truncated(&self, dims: usize) -> Self {
        let mut out = self.clone();
        for c in &mut out.coords {
            c.truncate(dims);
        }
        out
    }

    // style indices that have at least one sample, in table order
    fn present_styles(&self) -> Vec<usize> {
        let mut seen = vec![false; self.styles.len()];
        for s in &self.style_of {
            seen[*s] = true;
        }
        (0..self.styles.len()).filter(|s| seen[*s]).collect()
    }
}

fn index_labels<S: AsRef<str>>(labels: &[S]) -> (Vec<String>, Vec<usize>) {
    let mut names: Vec<String> = Vec::new();
    let idx = labels
        .iter()
        .map(|l| {
            let l = l.as_ref();
            match names.iter().position(|n| n == l) {
                Some(i) => i,
                None => {
                    names.push(l.to_string());
                    names.len() - 1
                }
            }
        })
        .collect();
    (names, idx)
}

/// Projects every sample of a `T = 1` dataset into the subspace.
pub fn cluster_coords(ds: &ScoreDataset, sub: &ConceptSubspace) -> Result<ClusteredCoords> {
    if ds.dim() != sub.dim() {
        return Err(Error::Shape(format!(
            "dataset dimension {} does not match subspace dimension {}",
            ds.dim(),
            sub.dim()
        )));
    }
    if ds.timesteps() > 1 {
        return Err(Error::Argument(format!(
            "dataset has {} timesteps; aggregate before computing coordinates",
            ds.timesteps()
        )));
    }
    let styles: Vec<String> = ds.styles().iter().map(|l| l.name().to_string()).collect();
    let contents: Vec<String> = ds.contents().iter().map(|l| l.name().to_string()).collect();
    let mut coords = Vec::with_capacity(ds.len());
    let mut style_of = Vec::with_capacity(ds.len());
    let mut content_of = Vec::with_capacity(ds.len());
    let mut replicates = Vec::with_capacity(ds.len());
    for s in ds.samples() {
        coords.push(project_coords(sub, &s.vector)?);
        style_of.push(ds.styles().iter().position(|l| l == &s.style).expect("validated"));
        content_of.push(ds.contents().iter().position(|l| l == &s.content).expect("validated"));
        replicates.push(s.replicate);
    }
    ClusteredCoords::new(coords, styles, contents, style_of, content_of, replicates)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub bins: usize,
    pub smoothing: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

/// Symmetric matrix of Jensen-Shannon distances between style clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub bins: usize,
    pub smoothing: f64,
    /// Number of leading coordinates histogrammed (1 or 2).
    pub histogram_dims: usize,
}

/// Smoothed, normalised histograms of the leading one or two coordinates,
/// one per style present, over bin edges shared by all styles.
///
/// Returns the style labels alongside their histograms (row-major cells).
pub fn style_histograms(cc: &ClusteredCoords, cfg: HistogramConfig) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    if cfg.bins == 0 {
        return Err(Error::Argument("histogram needs at least one bin".into()));
    }
    if !(cfg.smoothing >= 0.0) || !cfg.smoothing.is_finite() {
        return Err(Error::Argument("smoothing must be finite and non-negative".into()));
    }
    let present = cc.present_styles();
    if present.len() < 2 {
        return Err(Error::Argument(format!(
            "inter-cluster distances need at least 2 styles, found {}",
            present.len()
        )));
    }
    let dims = cc.k().min(2);
    if dims == 0 {
        return Err(Error::Argument("coordinates have no dimensions".into()));
    }
    let mut edges = Vec::with_capacity(dims);
    let mut degenerate = 0;
    for axis in 0..dims {
        let (lo, hi) = cc
            .coords
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c[axis]), hi.max(c[axis])));
        let range = hi - lo;
        if range > 0.0 {
            edges.push((lo - HISTOGRAM_MARGIN * range, hi + HISTOGRAM_MARGIN * range));
        } else {
            degenerate += 1;
            edges.push((lo - 0.5, hi + 0.5));
        }
    }
    if degenerate == dims {
        return Err(Error::DegenerateRange(
            "all subspace coordinates are identical".into(),
        ));
    }

    let bins = cfg.bins;
    let cells = bins.pow(dims as u32);
    let bin_of = |x: f64, (lo, hi): (f64, f64)| -> usize {
        let b = ((x - lo) / (hi - lo) * bins as f64).floor();
        (b.max(0.0) as usize).min(bins - 1)
    };
    let mut counts = vec![vec![0.0f64; cells]; cc.styles.len()];
    for (i, c) in cc.coords.iter().enumerate() {
        let mut cell = 0;
        for axis in 0..dims {
            cell = cell * bins + bin_of(c[axis], edges[axis]);
        }
        counts[cc.style_of[i]][cell] += 1.0;
    }
    let labels = present.iter().map(|s| cc.styles[*s].clone()).collect();
    let hists = present
        .iter()
        .map(|s| {
            let h = &counts[*s];
            let total: f64 = h.iter().sum::<f64>() + cfg.smoothing * cells as f64;
            h.iter().map(|c| (c + cfg.smoothing) / total).collect()
        })
        .collect();
    Ok((labels, hists))
}

/// `√JSD(p, q)` with base-2 logarithms; lies in `[0, 1]`.
pub fn js_distance(p: &[f64], q: &[f64]) -> f64 {
    let mut jsd = 0.0;
    for (a, b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if *a > 0.0 {
            jsd += 0.5 * a * (a / m).log2();
        }
        if *b > 0.0 {
            jsd += 0.5 * b * (b / m).log2();
        }
    }
    jsd.clamp(0.0, 1.0).sqrt()
}

pub fn js_distance_matrix(cc: &ClusteredCoords, cfg: HistogramConfig) -> Result<JsMatrix> {
    let (labels, hists) = style_histograms(cc, cfg)?;
    let n = labels.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = js_distance(&hists[i], &hists[j]);
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    Ok(JsMatrix {
        labels,
        values,
        bins: cfg.bins,
        smoothing: cfg.smoothing,
        histogram_dims: cc.k().min(2),
    })
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Per-sample silhouette values over style clusters.
pub fn silhouette_samples(cc: &ClusteredCoords) -> Result<Vec<f64>> {
    let n = cc.len();
    if n < 2 {
        return Err(Error::Argument(format!("silhouette needs at least 2 samples, got {n}")));
    }
    if cc.present_styles().len() < 2 {
        return Err(Error::Argument("silhouette needs at least 2 clusters".into()));
    }
    let groups = cc.styles.len();
    let mut sizes = vec![0usize; groups];
    for s in &cc.style_of {
        sizes[*s] += 1;
    }
    let mut out = Vec::with_capacity(n);
    let mut sums = vec![0.0; groups];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[cc.style_of[j]] += euclidean(&cc.coords[i], &cc.coords[j]);
            }
        }
        let own = cc.style_of[i];
        if sizes[own] == 1 {
            out.push(0.0);
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..groups)
            .filter(|g| *g != own && sizes[*g] > 0)
            .map(|g| sums[g] / sizes[g] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        out.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    Ok(out)
}

/// Mean silhouette over all samples, clustering by style.
pub fn silhouette(cc: &ClusteredCoords) -> Result<f64> {
    let s = silhouette_samples(cc)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Z-scores coordinates within each content group, per dimension.
pub fn normalize_by_content(cc: &ClusteredCoords) -> Result<ClusteredCoords> {
    let k = cc.k();
    let groups = cc.contents.len();
    let mut sizes = vec![0usize; groups];
    let mut mean = vec![vec![0.0; k]; groups];
    for (i, c) in cc.coords.iter().enumerate() {
        let g = cc.content_of[i];
        sizes[g] += 1;
        for (m, v) in mean[g].iter_mut().zip(c) {
            *m += v;
        }
    }
    for g in 0..groups {
        if sizes[g] == 1 {
            return Err(Error::Argument(format!(
                "content {:?} has a single sample; normalisation needs at least 2",
                cc.contents[g]
            )));
        }
        if sizes[g] > 0 {
            mean[g].iter_mut().for_each(|m| *m /= sizes[g] as f64);
        }
    }
    let mut var = vec![vec![0.0; k]; groups];
    for (i, c) in cc.coords.iter().enumerate() {
        let g = cc.content_of[i];
        for d in 0..k {
            var[g][d] += (c[d] - mean[g][d]).powi(2);
        }
    }
    let std: Vec<Vec<f64>> = var
        .iter()
        .zip(&sizes)
        .map(|(v, n)| v.iter().map(|x| (x / (*n).max(1) as f64).sqrt()).collect())
        .collect();
    let mut out = cc.clone();
    for (i, c) in out.coords.iter_mut().enumerate() {
        let g = cc.content_of[i];
        for d in 0..k {
            c[d] -= mean[g][d];
            if std[g][d] >= MIN_STD {
                c[d] /= std[g][d];
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Separable,
    Entangled,
    Inexpressive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Separable => "SEPARABLE",
            Verdict::Entangled => "ENTANGLED",
            Verdict::Inexpressive => "INEXPRESSIVE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Silhouette gain from normalisation above which content is judged entangled.
    pub delta: f64,
    /// Both scores below this mean the subspace barely separates styles at all.
    pub low: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { delta: 0.15, low: 0.20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub silhouette_raw: f64,
    pub silhouette_norm: f64,
    pub delta: f64,
    pub verdict: Verdict,
    pub thresholds: Thresholds,
}

impl SeparabilityReport {
    /// Classifies a pair of silhouette scores.
    pub fn from_scores(raw: f64, norm: f64, thresholds: Thresholds) -> Result<Self> {
        for (name, v) in [("raw", raw), ("normalized", norm)] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::Argument(format!("{name} silhouette {v} outside [-1, 1]")));
            }
        }
        let delta = norm - raw;
        let verdict = if raw < thresholds.low && norm < thresholds.low {
            Verdict::Inexpressive
        } else if delta > thresholds.delta {
            Verdict::Entangled
        } else {
            Verdict::Separable
        };
        Ok(Self {
            silhouette_raw: raw,
            silhouette_norm: norm,
            delta,
            verdict,
            thresholds,
        })
    }
}

pub fn separability_report(cc: &ClusteredCoords, thresholds: Thresholds) -> Result<SeparabilityReport> {
    let raw = silhouette(cc)?;
    let norm = silhouette(&normalize_by_content(cc)?)?;
    SeparabilityReport::from_scores(raw, norm, thresholds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub rank: usize,
    pub template: String,
    #[serde(flatten)]
    pub report: SeparabilityReport,
}

/// Orders templates by smallest silhouette delta, then highest normalised
/// silhouette, then name.
pub fn rank_templates(reports: &BTreeMap<String, SeparabilityReport>) -> Vec<RankRow> {
    let mut rows: Vec<(&String, &SeparabilityReport)> = reports.iter().collect();
    rows.sort_by(|(ta, a), (tb, b)| {
        a.delta
            .total_cmp(&b.delta)
            .then(b.silhouette_norm.total_cmp(&a.silhouette_norm))
            .then(ta.cmp(tb))
    });
    rows.into_iter()
        .enumerate()
        .map(|(i, (t, r))| RankRow {
            rank: i + 1,
            template: t.clone(),
            report: *r,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestStyle {
    pub style: String,
    pub nearest: String,
    pub distance: f64,
}

/// For each style, the other style at the smallest JS distance. Ties go to
/// the earlier label.
pub fn nearest_style_report(m: &JsMatrix) -> Result<Vec<NearestStyle>> {
    let n = m.labels.len();
    if n < 2 {
        return Err(Error::Argument("nearest-style report needs at least 2 styles".into()));
    }
    Ok((0..n)
        .map(|i| {
            let mut best = if i == 0 { 1 } else { 0 };
            for j in 0..n {
                if j != i && m.values[i][j] < m.values[i][best] {
                    best = j;
                }
            }
            NearestStyle {
                style: m.labels[i].clone(),
                nearest: m.labels[best].clone(),
                distance: m.values[i][best],
            }
        })
        .collect())
}
