//! Seeded ground-truth factor model for score vectors.
//!
//! Every sample is
//!
//! ```text
//! s = S·style[z] + C·content[w] + λ·S·interaction[w, z] + σ·ε
//! ```
//!
//! where `S` and `C` span orthogonal subspaces. With `λ = 0` a sample's
//! style-subspace coordinates depend only on its style label, i.e. the two
//! concept sets are causally separable by construction.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{render_prompts, ConceptLabel, PromptGrid, ScoreDataset, ScoreSample};
use crate::error::{Error, Result};
use crate::tensor::{self, Matrix};

/// Minimum pairwise distance between style codes.
pub const MIN_STYLE_SEPARATION: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionCode {
    pub content: String,
    pub style: String,
    pub code: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticModelSpec {
    pub dim: usize,
    /// `D × Ks`, orthonormal columns.
    pub style_basis: Matrix,
    /// `D × Kc`, orthonormal columns orthogonal to `style_basis`.
    pub content_basis: Matrix,
    pub style_codes: BTreeMap<String, Vec<f64>>,
    pub content_codes: BTreeMap<String, Vec<f64>>,
    pub entanglement_strength: f64,
    #[serde(default)]
    pub interaction_codes: Vec<InteractionCode>,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Compact description from which a full [`SyntheticModelSpec`] is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticRecipe {
    pub dim: usize,
    pub style_rank: usize,
    pub content_rank: usize,
    pub styles: Vec<String>,
    pub contents: Vec<String>,
    #[serde(default)]
    pub entanglement_strength: f64,
    #[serde(default = "default_sigma")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Standard deviation of style codes along each direction they span.
    #[serde(default = "default_style_scale")]
    pub style_scale: f64,
    /// Whiten the drawn style codes so their spread is the same along every
    /// direction they span.
    #[serde(default = "default_isotropic")]
    pub isotropic_styles: bool,
}

fn default_isotropic() -> bool {
    true
}

fn default_sigma() -> f64 {
    0.1
}

fn default_style_scale() -> f64 {
    1.5
}

impl SyntheticRecipe {
    /// Acceptance-run defaults: D=64, Ks=Kc=4, 5 styles, 6 contents, σ=0.1.
    pub fn defaults(seed: u64) -> Self {
        Self {
            dim: 64,
            style_rank: 4,
            content_rank: 4,
            styles: (0..5).map(|i| format!("style{i}")).collect(),
            contents: (0..6).map(|i| format!("content{i}")).collect(),
            entanglement_strength: 0.0,
            noise_sigma: default_sigma(),
            seed,
            style_scale: default_style_scale(),
            isotropic_styles: true,
        }
    }

    /// Draws bases and codes from the seed.
    ///
    /// Interaction codes are one shift per content, shared by every style:
    /// changing the content moves all style clusters the same way.
    pub fn build(&self) -> Result<SyntheticModelSpec> {
        let (d, ks, kc) = (self.dim, self.style_rank, self.content_rank);
        if ks == 0 || kc == 0 || ks + kc > d {
            return Err(Error::Spec(format!(
                "ranks Ks={ks}, Kc={kc} must be positive and fit in D={d}"
            )));
        }
        if !(self.style_scale > 0.0) {
            return Err(Error::Spec("style_scale must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let raw: Vec<f64> = (0..(ks + kc) * d).map(|_| rng.sample(StandardNormal)).collect();
        let frame = tensor::orthonormalize_rows(&Matrix::new(ks + kc, d, raw)?)?;
        let pick = |range: std::ops::Range<usize>| -> Result<Matrix> {
            let rows: Vec<Vec<f64>> = range.map(|r| frame.row(r).to_vec()).collect();
            Ok(Matrix::from_rows(&rows)?.transpose())
        };
        let style_basis = pick(0..ks)?;
        let content_basis = pick(ks..ks + kc)?;

        let codes = loop {
            let mut codes: Vec<Vec<f64>> = (0..self.styles.len())
                .map(|_| {
                    (0..ks)
                        .map(|_| self.style_scale * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            if self.isotropic_styles {
                codes = whiten(&codes, self.style_scale)?;
            }
            let separated = codes.iter().enumerate().all(|(i, a)| {
                codes[..i].iter().all(|b| distance(a, b) >= MIN_STYLE_SEPARATION)
            });
            if separated {
                break codes;
            }
        };
        let mut style_codes: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (name, code) in self.styles.iter().zip(codes) {
            if style_codes.insert(name.clone(), code).is_some() {
                return Err(Error::Spec(format!("duplicate style {name:?}")));
            }
        }
        let mut content_codes = BTreeMap::new();
        let mut interaction_codes = Vec::new();
        for name in &self.contents {
            let code: Vec<f64> = (0..kc).map(|_| rng.sample(StandardNormal)).collect();
            if content_codes.insert(name.clone(), code).is_some() {
                return Err(Error::Spec(format!("duplicate content {name:?}")));
            }
            let shift: Vec<f64> = (0..ks).map(|_| rng.sample(StandardNormal)).collect();
            for style in &self.styles {
                interaction_codes.push(InteractionCode {
                    content: name.clone(),
                    style: style.clone(),
                    code: shift.clone(),
                });
            }
        }
        let spec = SyntheticModelSpec {
            dim: d,
            style_basis,
            content_basis,
            style_codes,
            content_codes,
            entanglement_strength: self.entanglement_strength,
            interaction_codes,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Re-centres `codes` and rescales them so that their covariance is
/// `scale² · I` on the span of the centred codes.
fn whiten(codes: &[Vec<f64>], scale: f64) -> Result<Vec<Vec<f64>>> {
    let n = codes.len();
    let k = codes.first().map_or(0, Vec::len);
    if n < 2 || k == 0 {
        return Ok(codes.to_vec());
    }
    let mean: Vec<f64> = (0..k)
        .map(|d| codes.iter().map(|c| c[d]).sum::<f64>() / n as f64)
        .collect();
    let centered: Vec<Vec<f64>> = codes
        .iter()
        .map(|c| c.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let x = Matrix::from_rows(&centered)?;
    let cov = x.transpose().matmul(&x)?.scale(1.0 / n as f64);
    let eig = tensor::sym_eigen(&cov, k)?;
    let cutoff = tensor::rank_cutoff(&eig.eigenvalues);
    Ok(centered
        .iter()
        .map(|c| {
            let mut out = vec![0.0; k];
            for (j, lambda) in eig.eigenvalues.iter().enumerate() {
                if *lambda <= cutoff {
                    continue;
                }
                let v = eig.vector(j);
                let coef = tensor::dot(&v, c) * scale / lambda.sqrt();
                for (o, vi) in out.iter_mut().zip(&v) {
                    *o += coef * vi;
                }
            }
            out
        })
        .collect())
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

impl SyntheticModelSpec {
    pub fn style_rank(&self) -> usize {
        self.style_basis.cols()
    }

    pub fn content_rank(&self) -> usize {
        self.content_basis.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::Spec("dim must be positive".into()));
        }
        for (name, m) in [("style_basis", &self.style_basis), ("content_basis", &self.content_basis)] {
            if m.rows() != d || m.cols() == 0 {
                return Err(Error::Spec(format!(
                    "{name} must be {d}xK with K >= 1, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            if m.data().len() != m.rows() * m.cols() || m.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::Spec(format!("{name} has malformed data")));
            }
            let dev = tensor::orthonormality_deviation(&m.transpose());
            if dev > tensor::ORTHONORMAL_TOLERANCE {
                return Err(Error::Spec(format!(
                    "{name} columns are not orthonormal (deviation {dev:e})"
                )));
            }
        }
        let cross = self.style_basis.transpose().matmul(&self.content_basis)?.max_abs();
        if cross >= 1e-8 {
            return Err(Error::Spec(format!(
                "style and content bases are not orthogonal (max |dot| = {cross:e})"
            )));
        }
        let (ks, kc) = (self.style_rank(), self.content_rank());
        for (name, code) in &self.style_codes {
            check_code("style", name, code, ks)?;
        }
        for (name, code) in &self.content_codes {
            check_code("content", name, code, kc)?;
        }
        for ic in &self.interaction_codes {
            check_code("interaction", &format!("{}/{}", ic.content, ic.style), &ic.code, ks)?;
        }
        let codes: Vec<(&String, &Vec<f64>)> = self.style_codes.iter().collect();
        for (i, (na, a)) in codes.iter().enumerate() {
            for (nb, b) in &codes[i + 1..] {
                let dist = distance(a, b);
                if dist < MIN_STYLE_SEPARATION {
                    return Err(Error::Spec(format!(
                        "style codes {na:?} and {nb:?} are only {dist:.3} apart (minimum {MIN_STYLE_SEPARATION})"
                    )));
                }
            }
        }
        if !(self.entanglement_strength >= 0.0) || !self.entanglement_strength.is_finite() {
            return Err(Error::Spec("entanglement_strength must be finite and >= 0".into()));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::Spec("noise_sigma must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialisation.
    pub fn hash(&self) -> String {
        crate::io::sha256_hex(&serde_json::to_vec(self).expect("spec serialises"))
    }

    fn interaction(&self, content: &str, style: &str) -> Option<&[f64]> {
        self.interaction_codes
            .iter()
            .find(|ic| ic.content == content && ic.style == style)
            .map(|ic| ic.code.as_slice())
    }
}

fn check_code(kind: &str, name: &str, code: &[f64], len: usize) -> Result<()> {
    if code.len() != len {
        return Err(Error::Spec(format!(
            "{kind} code {name:?} has length {}, expected {len}",
            code.len()
        )));
    }
    if code.iter().any(|v| !v.is_finite()) {
        return Err(Error::Spec(format!("{kind} code {name:?} has non-finite entries")));
    }
    Ok(())
}

// Independent noise stream per (seed, content, style, replicate).
fn noise_rng(seed: u64, content: &str, style: &str, replicate: u32) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"concept-lens/noise/v1");
    h.update(seed.to_le_bytes());
    for part in [content, style] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    h.update(replicate.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// One `T = 1` sample per grid cell, in grid render order.
pub fn generate(spec: &SyntheticModelSpec, grid: &PromptGrid) -> Result<ScoreDataset> {
    spec.validate()?;
    let d = spec.dim;
    let lambda = spec.entanglement_strength;
    let mut cell_means: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (ci, content) in grid.contents().iter().enumerate() {
        let w = spec.content_codes.get(content.name()).ok_or_else(|| {
            Error::Spec(format!("no content code for label {:?}", content.name()))
        })?;
        for (si, style) in grid.styles().iter().enumerate() {
            let z = spec
                .style_codes
                .get(style.name())
                .ok_or_else(|| Error::Spec(format!("no style code for label {:?}", style.name())))?;
            let mut style_coords = z.clone();
            if lambda != 0.0 {
                let shift = spec.interaction(content.name(), style.name()).ok_or_else(|| {
                    Error::Spec(format!(
                        "no interaction code for ({:?}, {:?})",
                        content.name(),
                        style.name()
                    ))
                })?;
                for (c, s) in style_coords.iter_mut().zip(shift) {
                    *c += lambda * s;
                }
            }
            let mut mean = spec.style_basis.mul_vec(&style_coords)?;
            for (m, c) in mean.iter_mut().zip(spec.content_basis.mul_vec(w)?) {
                *m += c;
            }
            cell_means.insert((ci, si), mean);
        }
    }

    let ci_of = |l: &str| grid.contents().iter().position(|c| c.name() == l).expect("grid label");
    let si_of = |l: &str| grid.styles().iter().position(|s| s.name() == l).expect("grid label");
    let samples = render_prompts(grid)
        .into_iter()
        .map(|row| {
            let mean = &cell_means[&(ci_of(&row.content), si_of(&row.style))];
            let mut vector = mean.clone();
            if spec.noise_sigma > 0.0 {
                let mut rng = noise_rng(spec.seed, &row.content, &row.style, row.replicate);
                for v in vector.iter_mut() {
                    *v += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
            debug_assert_eq!(vector.len(), d);
            Ok(ScoreSample {
                content: ConceptLabel::content(row.content)?,
                style: ConceptLabel::style(row.style)?,
                replicate: row.replicate,
                timestep: 0,
                vector,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreDataset::with_labels(
        d,
        grid.contents().to_vec(),
        grid.styles().to_vec(),
        samples,
        format!("synthetic:sha256:{}", spec.hash()),
    )
}

/// Exact projector onto the span of the style basis.
pub fn true_style_projector(spec: &SyntheticModelSpec) -> Result<Matrix> {
    tensor::projector_from_basis(&spec.style_basis.transpose())
}

/// Orthonormal basis (rows) of the span of `S·(z − z̄)` over the given
/// styles: the directions a noiseless baseline slice actually varies along.
pub fn style_variation_basis(spec: &SyntheticModelSpec, styles: &[ConceptLabel]) -> Result<Matrix> {
    let mut points = Vec::with_capacity(styles.len());
    for s in styles {
        let z = spec
            .style_codes
            .get(s.name())
            .ok_or_else(|| Error::Spec(format!("no style code for label {:?}", s.name())))?;
        points.push(spec.style_basis.mul_vec(z)?);
    }
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientVariation("need at least two styles".into()));
    }
    let mut centered = Matrix::from_rows(&points)?;
    for c in 0..spec.dim {
        let mean = centered.column(c).iter().sum::<f64>() / n as f64;
        for r in 0..n {
            centered.set(r, c, centered.get(r, c) - mean);
        }
    }
    let k = (n - 1).min(spec.style_rank());
    let eig = tensor::gram_eigen(&centered, k)?;
    Ok(eig.result.basis_rows())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(contents: &[&str], styles: &[&str], replicates: u32) -> PromptGrid {
        PromptGrid::new(
            "{content} in {style}",
            contents.iter().copied(),
            styles.iter().copied(),
            replicates,
            contents[0],
        )
        .unwrap()
    }

    fn recipe(lambda: f64, sigma: f64) -> SyntheticRecipe {
        SyntheticRecipe {
            dim: 16,
            style_rank: 2,
            content_rank: 3,
            styles: vec!["A".into(), "B".into(), "C".into()],
            contents: vec!["x".into(), "y".into()],
            entanglement_strength: lambda,
            noise_sigma: sigma,
            seed: 5,
            style_scale: 1.5,
            isotropic_styles: true,
        }
    }

    fn style_coords(spec: &SyntheticModelSpec, v: &[f64]) -> Vec<f64> {
        spec.style_basis.transpose().mul_vec(v).unwrap()
    }

    #[test]
    fn noiseless_replicates_are_identical() {
        let spec = recipe(0.0, 0.0).build().unwrap();
        let ds = generate(&spec, &grid(&["x"], &["A"], 3)).unwrap();
        assert_eq!(ds.len(), 3);
        assert!(ds.samples().windows(2).all(|w| w[0].vector == w[1].vector));
    }

    #[test]
    fn separable_style_coordinates_depend_only_on_style() {
        let spec = recipe(0.0, 0.0).build().unwrap();
        let ds = generate(&spec, &grid(&["x", "y"], &["A", "B", "C"], 2)).unwrap();
        for a in ds.samples() {
            for b in ds.samples().iter().filter(|b| b.style == a.style) {
                let (ca, cb) = (style_coords(&spec, &a.vector), style_coords(&spec, &b.vector));
                for (p, q) in ca.iter().zip(&cb) {
                    assert!((p - q).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = recipe(0.7, 0.3).build().unwrap();
        let g = grid(&["x", "y"], &["A", "B", "C"], 4);
        assert_eq!(generate(&spec, &g).unwrap(), generate(&spec, &g).unwrap());
        assert_eq!(recipe(0.7, 0.3).build().unwrap(), spec);
    }

    #[test]
    fn noise_streams_differ_per_replicate() {
        let spec = recipe(0.0, 0.1).build().unwrap();
        let ds = generate(&spec, &grid(&["x"], &["A"], 2)).unwrap();
        assert_ne!(ds.samples()[0].vector, ds.samples()[1].vector);
    }

    #[test]
    fn shift_grows_linearly_in_entanglement() {
        let shift = |lambda: f64| {
            let mut r = recipe(lambda, 0.0);
            r.entanglement_strength = lambda;
            let spec = r.build().unwrap();
            let ds = generate(&spec, &grid(&["x", "y"], &["A"], 1)).unwrap();
            let a = style_coords(&spec, &ds.samples()[0].vector);
            let b = style_coords(&spec, &ds.samples()[1].vector);
            distance(&a, &b)
        };
        let (half, one) = (shift(0.5), shift(1.0));
        assert!(half > 0.0);
        assert!((one / half - 2.0).abs() < 1e-9);
        assert!(shift(0.0) < 1e-9);
    }

    #[test]
    fn per_content_means_match_when_separable() {
        let spec = recipe(0.0, 0.0).build().unwrap();
        let ds = generate(&spec, &grid(&["x", "y"], &["A", "B", "C"], 1)).unwrap();
        let mean_for = |c: &str| {
            let rows: Vec<Vec<f64>> = ds
                .samples()
                .iter()
                .filter(|s| s.content.name() == c)
                .map(|s| style_coords(&spec, &s.vector))
                .collect();
            (0..2)
                .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64)
                .collect::<Vec<_>>()
        };
        let (mx, my) = (mean_for("x"), mean_for("y"));
        assert!(mx.iter().zip(&my).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn missing_code_names_label() {
        let spec = recipe(0.0, 0.0).build().unwrap();
        let err = generate(&spec, &grid(&["x", "tofu"], &["A"], 1)).unwrap_err();
        assert!(err.to_string().contains("tofu"), "{err}");
    }

    #[test]
    fn true_projector_properties() {
        let spec = recipe(0.0, 0.0).build().unwrap();
        let p = true_style_projector(&spec).unwrap();
        assert!((p.trace() - 2.0).abs() < 1e-12);
        assert!(p.matmul(&spec.content_basis).unwrap().max_abs() < 1e-12);

        let mut e1 = Matrix::zeros(3, 1);
        e1.set(0, 0, 1.0);
        let mut e2 = Matrix::zeros(3, 1);
        e2.set(1, 0, 1.0);
        let tiny = SyntheticModelSpec {
            dim: 3,
            style_basis: e1,
            content_basis: e2,
            style_codes: BTreeMap::new(),
            content_codes: BTreeMap::new(),
            entanglement_strength: 0.0,
            interaction_codes: vec![],
            noise_sigma: 0.0,
            seed: 0,
        };
        assert_eq!(true_style_projector(&tiny).unwrap(), Matrix::diag(&[1.0, 0.0, 0.0]));
    }

    #[test]
    fn validation_catches_bad_specs() {
        let mut spec = recipe(0.0, 0.0).build().unwrap();
        spec.content_basis = spec.style_basis.clone();
        assert!(spec.validate().is_err());

        let mut spec = recipe(0.0, 0.0).build().unwrap();
        spec.style_codes.insert("A".into(), vec![0.0, 0.0]);
        spec.style_codes.insert("B".into(), vec![0.5, 0.0]);
        assert!(spec.validate().unwrap_err().to_string().contains("apart"));

        let mut spec = recipe(0.0, 0.0).build().unwrap();
        spec.noise_sigma = -1.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn whitened_styles_form_regular_simplex() {
        // five whitened points in four dimensions are equidistant
        let mut r = SyntheticRecipe::defaults(2);
        r.styles.truncate(5);
        let spec = r.build().unwrap();
        let codes: Vec<&Vec<f64>> = spec.style_codes.values().collect();
        let d0 = distance(codes[0], codes[1]);
        for i in 0..5 {
            for j in (i + 1)..5 {
                assert!((distance(codes[i], codes[j]) - d0).abs() < 1e-9);
            }
        }
        // ‖ci − cj‖² = 2·n·scale²
        assert!((d0 * d0 - 2.0 * 5.0 * 1.5 * 1.5).abs() < 1e-9);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = recipe(0.5, 0.1).build().unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: SyntheticModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.hash(), spec.hash());
    }
}
