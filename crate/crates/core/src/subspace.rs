//! Concept-subspace estimation and the projection edit.
//!
//! A subspace is estimated from a slice that varies the style while holding
//! the content fixed: the top eigenvectors of the slice's sample covariance
//! become its orthonormal basis. Edits replace the in-subspace component of
//! one score with that of another:
//!
//! ```text
//! s_edit = (I − P)·s_orig + P·s_new,   P = Bᵀ·B
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{ConceptLabel, ScoreDataset};
use crate::error::{Error, Result};
use crate::io;
use crate::tensor::{self, dot, Matrix};

/// Explained-variance target for automatic `k`.
pub const AUTO_VARIANCE_TARGET: f64 = 0.95;
/// Upper bound on automatically chosen `k`.
pub const AUTO_MAX_K: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KSelection {
    Fixed(usize),
    #[default]
    Auto,
}

impl std::str::FromStr for KSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(KSelection::Auto);
        }
        match s.parse::<usize>() {
            Ok(0) => Err(Error::Argument("k must be at least 1".into())),
            Ok(k) => Ok(KSelection::Fixed(k)),
            Err(_) => Err(Error::Argument(format!("k must be a positive integer or \"auto\", got {s:?}"))),
        }
    }
}

impl std::fmt::Display for KSelection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KSelection::Fixed(k) => write!(f, "{k}"),
            KSelection::Auto => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimateOptions {
    pub k: KSelection,
    /// Subtract the slice mean before the eigendecomposition.
    pub center: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            k: KSelection::Auto,
            center: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptSubspace {
    basis: Matrix,
    eigenvalues: Vec<f64>,
    center: Vec<f64>,
    baseline_content: ConceptLabel,
    explained_variance_ratio: f64,
    /// Requested `k` when the data supported fewer directions.
    requested_k: Option<usize>,
}

impl ConceptSubspace {
    pub fn new(
        basis: Matrix,
        eigenvalues: Vec<f64>,
        center: Vec<f64>,
        baseline_content: ConceptLabel,
        explained_variance_ratio: f64,
    ) -> Result<Self> {
        let k = basis.rows();
        if k == 0 {
            return Err(Error::Argument("a concept subspace needs at least one direction".into()));
        }
        let dev = tensor::orthonormality_deviation(&basis);
        if dev > tensor::ORTHONORMAL_TOLERANCE {
            return Err(Error::Argument(format!(
                "basis rows are not orthonormal: max |B·Bᵀ - I| = {dev:e}"
            )));
        }
        if eigenvalues.len() != k {
            return Err(Error::Shape(format!("{} eigenvalues for {k} directions", eigenvalues.len())));
        }
        if eigenvalues.iter().any(|v| !(*v >= 0.0)) || eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Argument("eigenvalues must be non-negative and descending".into()));
        }
        if center.len() != basis.cols() {
            return Err(Error::Shape(format!(
                "center has length {}, basis dimension is {}",
                center.len(),
                basis.cols()
            )));
        }
        if !(0.0..=1.0).contains(&explained_variance_ratio) {
            return Err(Error::Argument(format!(
                "explained variance ratio {explained_variance_ratio} outside [0, 1]"
            )));
        }
        Ok(Self {
            basis,
            eigenvalues,
            center,
            baseline_content,
            explained_variance_ratio,
            requested_k: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn k(&self) -> usize {
        self.basis.rows()
    }

    /// `K × D`, orthonormal rows.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn baseline_content(&self) -> &ConceptLabel {
        &self.baseline_content
    }

    pub fn explained_variance_ratio(&self) -> f64 {
        self.explained_variance_ratio
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.requested_k.is_some()
    }

    pub fn requested_k(&self) -> Option<usize> {
        self.requested_k
    }

    /// `D × D` projector `Bᵀ·B`.
    pub fn projector(&self) -> Result<Matrix> {
        tensor::projector_from_basis(&self.basis)
    }

    fn check_len(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Shape(format!(
                "{what} has length {}, subspace dimension is {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    // B·v
    fn coefficients(&self, v: &[f64]) -> Vec<f64> {
        (0..self.k()).map(|r| dot(self.basis.row(r), v)).collect()
    }
}

/// Estimates a subspace from a `T = 1`, single-content, multi-style slice.
pub fn estimate(slice: &ScoreDataset, opts: EstimateOptions) -> Result<ConceptSubspace> {
    if slice.timesteps() > 1 {
        return Err(Error::Argument(format!(
            "slice has {} timesteps; aggregate it or estimate per timestep",
            slice.timesteps()
        )));
    }
    let samples = slice.samples();
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientVariation(format!(
            "subspace estimation needs at least 2 samples, got {n}"
        )));
    }
    let baseline = samples[0].content.clone();
    if samples.iter().any(|s| s.content != baseline) {
        return Err(Error::Argument(
            "estimation slice must hold a single content label".into(),
        ));
    }
    if slice.present_styles().len() < 2 {
        return Err(Error::InsufficientVariation(
            "estimation slice must vary over at least 2 styles".into(),
        ));
    }
    if let KSelection::Fixed(0) = opts.k {
        return Err(Error::Argument("k must be at least 1".into()));
    }

    let d = slice.dim();
    let mut center = vec![0.0; d];
    if opts.center {
        for s in samples {
            for (c, v) in center.iter_mut().zip(&s.vector) {
                *c += v;
            }
        }
        center.iter_mut().for_each(|c| *c /= n as f64);
    }
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.vector.iter().zip(&center).map(|(v, c)| v - c).collect())
        .collect();
    let x = Matrix::from_rows(&rows)?;

    // full spectrum plus every eigenvector with a nonzero eigenvalue
    let (spectrum, vectors) = if d > n {
        let g = tensor::gram_eigen(&x, n.min(d))?;
        (g.spectrum, g.result)
    } else {
        let cov = x.transpose().matmul(&x)?.scale(1.0 / n as f64);
        let full = tensor::sym_eigen(&cov, d)?;
        (full.eigenvalues.clone(), full)
    };
    let cutoff = tensor::rank_cutoff(&spectrum);
    let rank = spectrum.iter().take_while(|v| **v > cutoff).count().min(vectors.len());
    let total: f64 = spectrum.iter().map(|v| v.max(0.0)).sum();
    let requested = match opts.k {
        KSelection::Fixed(k) => k,
        KSelection::Auto => {
            let cap = (n - 1).clamp(1, AUTO_MAX_K);
            let mut acc = 0.0;
            let mut k = cap;
            for (i, v) in spectrum.iter().enumerate().take(cap) {
                acc += v.max(0.0);
                if total > 0.0 && acc / total >= AUTO_VARIANCE_TARGET {
                    k = i + 1;
                    break;
                }
            }
            k
        }
    };
    let achieved = requested.min(rank);
    if achieved == 0 {
        return Err(Error::RankDeficient {
            requested,
            achieved: 0,
        });
    }
    let basis_rows: Vec<Vec<f64>> = (0..achieved).map(|j| vectors.vector(j)).collect();
    let eigenvalues: Vec<f64> = spectrum[..achieved].to_vec();
    let evr = (eigenvalues.iter().sum::<f64>() / total).clamp(0.0, 1.0);
    let mut sub = ConceptSubspace::new(
        Matrix::from_rows(&basis_rows)?,
        eigenvalues,
        center,
        baseline,
        evr,
    )?;
    if achieved < requested {
        sub.requested_k = Some(requested);
    }
    Ok(sub)
}

/// One subspace per timestep of a multi-timestep slice.
pub fn estimate_per_timestep(slice: &ScoreDataset, opts: EstimateOptions) -> Result<Vec<ConceptSubspace>> {
    (0..slice.timesteps() as u32)
        .map(|t| estimate(&slice.at_timestep(t)?, opts))
        .collect()
}

/// `B·(v − center)`: coordinates of `v` inside the subspace.
pub fn project_coords(sub: &ConceptSubspace, v: &[f64]) -> Result<Vec<f64>> {
    sub.check_len(v, "vector")?;
    let centered: Vec<f64> = v.iter().zip(&sub.center).map(|(a, c)| a - c).collect();
    Ok(sub.coefficients(&centered))
}

/// Scores under the original prompt and under the prompt carrying the new style.
#[derive(Debug, Clone, PartialEq)]
pub struct EditRequest {
    pub s_orig: Vec<f64>,
    pub s_new: Vec<f64>,
}

impl EditRequest {
    pub fn new(s_orig: Vec<f64>, s_new: Vec<f64>) -> Result<Self> {
        if s_orig.len() != s_new.len() {
            return Err(Error::Shape(format!(
                "s_orig has length {}, s_new has length {}",
                s_orig.len(),
                s_new.len()
            )));
        }
        if s_orig.iter().chain(&s_new).any(|v| !v.is_finite()) {
            return Err(Error::Validation("edit inputs must be finite".into()));
        }
        Ok(Self { s_orig, s_new })
    }
}

/// `(I − P)·s_orig + P·s_new`, evaluated as `s_orig + Bᵀ·B·(s_new − s_orig)`.
pub fn edit(sub: &ConceptSubspace, req: &EditRequest) -> Result<Vec<f64>> {
    sub.check_len(&req.s_orig, "s_orig")?;
    sub.check_len(&req.s_new, "s_new")?;
    let diff: Vec<f64> = req.s_new.iter().zip(&req.s_orig).map(|(a, b)| a - b).collect();
    let coeffs = sub.coefficients(&diff);
    let mut out = req.s_orig.clone();
    for (r, c) in coeffs.iter().enumerate() {
        for (o, b) in out.iter_mut().zip(sub.basis.row(r)) {
            *o += c * b;
        }
    }
    Ok(out)
}

/// The subspace used for diagnostics plus, for multi-timestep data, one
/// subspace per timestep for stepwise edits.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBundle {
    pub aggregate: ConceptSubspace,
    pub per_timestep: Vec<ConceptSubspace>,
    /// Aggregation mode the `aggregate` subspace was estimated under.
    pub aggregation: String,
    pub centered: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFile {
    schema_version: u64,
    dim: usize,
    baseline_content: String,
    aggregation: String,
    centered: bool,
    blob: String,
    blob_sha256: String,
    subspaces: Vec<SubspaceEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubspaceEntry {
    timestep: Option<u32>,
    k: usize,
    requested_k: Option<usize>,
    eigenvalues: Vec<f64>,
    explained_variance_ratio: f64,
}

impl SubspaceBundle {
    pub fn single(aggregate: ConceptSubspace, centered: bool) -> Self {
        Self {
            aggregate,
            per_timestep: Vec::new(),
            aggregation: "mean".into(),
            centered,
        }
    }

    /// Subspace to use for an edit at `timestep` of a `timesteps`-long vector file.
    pub fn for_timestep(&self, timestep: usize, timesteps: usize) -> Result<&ConceptSubspace> {
        if timesteps == 1 {
            return Ok(&self.aggregate);
        }
        if self.per_timestep.len() != timesteps {
            return Err(Error::Shape(format!(
                "input has {timesteps} timesteps but the subspace file holds {} per-timestep subspaces",
                self.per_timestep.len()
            )));
        }
        Ok(&self.per_timestep[timestep])
    }

    /// Path of the float blob stored next to a bundle JSON file.
    pub fn blob_path(json_path: &Path) -> PathBuf {
        json_path.with_extension("f32")
    }

    /// Writes `<path>` (JSON metadata) and `<path>.f32` (bases then centers,
    /// little-endian f32, one subspace after another).
    pub fn save(&self, json_path: &Path) -> Result<()> {
        let blob_path = Self::blob_path(json_path);
        let all: Vec<(Option<u32>, &ConceptSubspace)> = std::iter::once((None, &self.aggregate))
            .chain(self.per_timestep.iter().enumerate().map(|(t, s)| (Some(t as u32), s)))
            .collect();
        let values = all.iter().flat_map(|(_, s)| {
            s.basis.data().iter().copied().chain(s.center.iter().copied())
        });
        let bytes = io::encode_f32(values)?;
        let file = BundleFile {
            schema_version: 1,
            dim: self.aggregate.dim(),
            baseline_content: self.aggregate.baseline_content.name().to_string(),
            aggregation: self.aggregation.clone(),
            centered: self.centered,
            blob: blob_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            blob_sha256: io::sha256_hex(&bytes),
            subspaces: all
                .iter()
                .map(|(t, s)| SubspaceEntry {
                    timestep: *t,
                    k: s.k(),
                    requested_k: s.requested_k,
                    eigenvalues: s.eigenvalues.clone(),
                    explained_variance_ratio: s.explained_variance_ratio,
                })
                .collect(),
        };
        if let Some(dir) = json_path.parent().filter(|p| !p.as_os_str().is_empty()) {
            io::create_dir_all(dir)?;
        }
        io::write_atomic(&blob_path, &bytes)?;
        let mut json = serde_json::to_vec_pretty(&file).expect("bundle serialises");
        json.push(b'\n');
        io::write_atomic(json_path, &json)
    }

    /// Loads a bundle. Bases are re-orthonormalised after the f32 round trip.
    pub fn load(json_path: &Path) -> Result<Self> {
        let text = io::read_file(json_path)?;
        let file: BundleFile = serde_json::from_slice(&text)
            .map_err(|e| Error::format("", format!("invalid subspace file: {e}")))?;
        if file.schema_version != 1 {
            return Err(Error::format("/schema_version", "unsupported subspace schema version"));
        }
        if file.blob.contains(['/', '\\']) {
            return Err(Error::format("/blob", "must be a plain file name"));
        }
        let blob_path = json_path.with_file_name(&file.blob);
        let bytes = io::read_file(&blob_path)?;
        let d = file.dim;
        let expected: usize = file.subspaces.iter().map(|s| (s.k + 1) * d * 4).sum();
        if bytes.len() != expected {
            return Err(Error::Corruption {
                file: blob_path,
                expected: expected as u64,
                actual: bytes.len() as u64,
            });
        }
        let actual = io::sha256_hex(&bytes);
        if actual != file.blob_sha256 {
            return Err(Error::Checksum {
                file: blob_path,
                expected: file.blob_sha256,
                actual,
            });
        }
        let values = io::decode_f32(&bytes);
        let baseline = ConceptLabel::content(file.baseline_content)?;
        let mut offset = 0;
        let mut aggregate = None;
        let mut per_timestep = Vec::new();
        for (i, entry) in file.subspaces.iter().enumerate() {
            let basis_len = entry.k * d;
            let raw = Matrix::new(entry.k, d, values[offset..offset + basis_len].to_vec())?;
            let center = values[offset + basis_len..offset + basis_len + d].to_vec();
            offset += basis_len + d;
            let mut sub = ConceptSubspace::new(
                tensor::orthonormalize_rows(&raw)?,
                entry.eigenvalues.clone(),
                center,
                baseline.clone(),
                entry.explained_variance_ratio,
            )
            .map_err(|e| Error::format(format!("/subspaces/{i}"), e.to_string()))?;
            sub.requested_k = entry.requested_k;
            match entry.timestep {
                None if aggregate.is_none() => aggregate = Some(sub),
                None => return Err(Error::format(format!("/subspaces/{i}"), "second aggregate subspace")),
                Some(t) if t as usize == per_timestep.len() => per_timestep.push(sub),
                Some(_) => return Err(Error::format(format!("/subspaces/{i}/timestep"), "timesteps out of order")),
            }
        }
        let aggregate =
            aggregate.ok_or_else(|| Error::format("/subspaces", "no aggregate subspace"))?;
        Ok(Self {
            aggregate,
            per_timestep,
            aggregation: file.aggregation,
            centered: file.centered,
        })
    }
}
