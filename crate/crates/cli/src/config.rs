//! Flat JSON run configuration. Every key has a matching command-line flag
//! that takes precedence over the file.

use std::path::{Path, PathBuf};

use concept_lens::dataset::Aggregation;
use concept_lens::diagnostics::{HistogramConfig, Thresholds, DEFAULT_BINS, DEFAULT_SMOOTHING};
use concept_lens::subspace::{EstimateOptions, KSelection};
use concept_lens::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<Vec<PathBuf>>,
    pub baseline: Option<String>,
    pub k: Option<KValue>,
    pub center: Option<bool>,
    pub aggregate: Option<String>,
    pub bins: Option<usize>,
    pub smoothing: Option<f64>,
    pub t_delta: Option<f64>,
    pub t_low: Option<f64>,
    pub silhouette_dims: Option<SilhouetteDims>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: Option<bool>,
}

/// `k` may be written as a number or as the string `"auto"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum KValue {
    Fixed(usize),
    Text(String),
}

impl KValue {
    fn resolve(&self) -> Result<KSelection> {
        match self {
            KValue::Fixed(k) => Ok(KSelection::Fixed(*k)),
            KValue::Text(s) => s.parse(),
        }
    }
}

/// Which subspace coordinates the silhouette is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SilhouetteDims {
    /// Every subspace coordinate.
    All,
    /// The two leading coordinates only.
    #[serde(rename = "top2")]
    #[value(name = "top2")]
    Top2,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Format {
            pointer: String::new(),
            message: format!("invalid config {}: {e}", path.display()),
        })
    }
}

/// Settings resolved from flags, then the config file, then defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub datasets: Vec<PathBuf>,
    pub baseline: Option<String>,
    pub estimate: EstimateOptions,
    pub aggregation: Aggregation,
    pub histogram: HistogramConfig,
    pub thresholds: Thresholds,
    pub silhouette_dims: SilhouetteDims,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub datasets: Vec<PathBuf>,
    pub baseline: Option<String>,
    pub k: Option<String>,
    pub no_center: bool,
    pub aggregate: Option<String>,
    pub bins: Option<usize>,
    pub smoothing: Option<f64>,
    pub t_delta: Option<f64>,
    pub t_low: Option<f64>,
    pub silhouette_dims: Option<SilhouetteDims>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, cli: Overrides) -> Result<Self> {
        let k = match (&cli.k, &file.k) {
            (Some(s), _) => s.parse()?,
            (None, Some(v)) => v.resolve()?,
            (None, None) => KSelection::Auto,
        };
        let center = !cli.no_center && file.center.unwrap_or(true);
        let aggregation = match cli.aggregate.as_ref().or(file.aggregate.as_ref()) {
            Some(s) => s.parse()?,
            None => Aggregation::Mean,
        };
        let histogram = HistogramConfig {
            bins: cli.bins.or(file.bins).unwrap_or(DEFAULT_BINS),
            smoothing: cli.smoothing.or(file.smoothing).unwrap_or(DEFAULT_SMOOTHING),
        };
        if histogram.bins == 0 {
            return Err(Error::Argument("bins must be at least 1".into()));
        }
        if !(histogram.smoothing > 0.0 && histogram.smoothing.is_finite()) {
            return Err(Error::Argument("smoothing must be a positive number".into()));
        }
        let defaults = Thresholds::default();
        let thresholds = Thresholds {
            delta: cli.t_delta.or(file.t_delta).unwrap_or(defaults.delta),
            low: cli.t_low.or(file.t_low).unwrap_or(defaults.low),
        };
        for (name, v) in [("t_delta", thresholds.delta), ("t_low", thresholds.low)] {
            if !(-2.0..=2.0).contains(&v) {
                return Err(Error::Argument(format!("{name} must lie in [-2, 2], got {v}")));
            }
        }
        let datasets = if cli.datasets.is_empty() {
            file.dataset.unwrap_or_default()
        } else {
            cli.datasets
        };
        Ok(Self {
            datasets,
            baseline: cli.baseline.or(file.baseline),
            estimate: EstimateOptions { k, center },
            aggregation,
            histogram,
            thresholds,
            silhouette_dims: cli
                .silhouette_dims
                .or(file.silhouette_dims)
                .unwrap_or(SilhouetteDims::All),
            out: cli.out.or(file.out),
            seed: cli.seed.or(file.seed),
            quiet: cli.quiet || file.quiet.unwrap_or(false),
        })
    }

    pub fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Argument("--out is required".into()))
    }

    pub fn single_dataset(&self) -> Result<&Path> {
        match self.datasets.as_slice() {
            [one] => Ok(one),
            [] => Err(Error::Argument("--dataset is required".into())),
            _ => Err(Error::Argument("this command takes exactly one --dataset".into())),
        }
    }
}
