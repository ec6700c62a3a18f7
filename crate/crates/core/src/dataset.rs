//! Labeled score samples, the version-1 on-disk ingestion format, and
//! prompt-grid bookkeeping.
//!
//! A dataset directory holds `manifest.json`, one `s_<i>_<j>_<r>.f32` blob
//! per (content, style, replicate) triple and a `manifest.sha256` sidecar.
//! Each blob is `T × D` little-endian f32 values, timestep-major, with no
//! header or padding.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::io;

pub const SCHEMA_VERSION: u64 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIGEST_FILE: &str = "manifest.sha256";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ConceptSet {
    Style,
    Content,
}

/// A concept name tagged with the set it belongs to. Names compare
/// case-sensitively.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptLabel {
    set: ConceptSet,
    name: String,
}

impl ConceptLabel {
    pub fn new(set: ConceptSet, name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.trim() != name {
            return Err(Error::Validation(format!(
                "label {name:?} must be nonempty and carry no surrounding whitespace"
            )));
        }
        Ok(Self { set, name })
    }

    pub fn content(name: impl Into<String>) -> Result<Self> {
        Self::new(ConceptSet::Content, name)
    }

    pub fn style(name: impl Into<String>) -> Result<Self> {
        Self::new(ConceptSet::Style, name)
    }

    pub fn set(&self) -> ConceptSet {
        self.set
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Display for ConceptLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// One score vector `s[x]` for a prompt, seed and timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSample {
    pub content: ConceptLabel,
    pub style: ConceptLabel,
    pub replicate: u32,
    pub timestep: u32,
    pub vector: Vec<f64>,
}

/// How timesteps are collapsed before diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Per-sample mean over all timesteps.
    #[default]
    Mean,
    /// Keep only the given timestep.
    Timestep(u32),
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            _ => s
                .strip_prefix("t:")
                .and_then(|t| t.parse().ok())
                .map(Aggregation::Timestep)
                .ok_or_else(|| {
                    Error::Argument(format!(
                        "aggregation must be \"mean\" or \"t:<step>\", got {s:?}"
                    ))
                }),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregation::Mean => f.write_str("mean"),
            Aggregation::Timestep(t) => write!(f, "t:{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDataset {
    dim: usize,
    timesteps: usize,
    contents: Vec<ConceptLabel>,
    styles: Vec<ConceptLabel>,
    samples: Vec<ScoreSample>,
    provenance: String,
}

impl ScoreDataset {
    /// Builds a dataset whose label tables are the labels in order of first
    /// appearance.
    pub fn new(dim: usize, samples: Vec<ScoreSample>, provenance: impl Into<String>) -> Result<Self> {
        let mut contents: Vec<ConceptLabel> = Vec::new();
        let mut styles: Vec<ConceptLabel> = Vec::new();
        for s in &samples {
            if !contents.contains(&s.content) {
                contents.push(s.content.clone());
            }
            if !styles.contains(&s.style) {
                styles.push(s.style.clone());
            }
        }
        Self::with_labels(dim, contents, styles, samples, provenance)
    }

    pub fn with_labels(
        dim: usize,
        contents: Vec<ConceptLabel>,
        styles: Vec<ConceptLabel>,
        samples: Vec<ScoreSample>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let timesteps = samples
            .iter()
            .map(|s| s.timestep as usize + 1)
            .max()
            .unwrap_or(1);
        let ds = Self {
            dim,
            timesteps,
            contents,
            styles,
            samples,
            provenance: provenance.into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Validation("dimension must be positive".into()));
        }
        check_table(&self.contents, ConceptSet::Content)?;
        check_table(&self.styles, ConceptSet::Style)?;
        for (i, s) in self.samples.iter().enumerate() {
            if s.vector.len() != self.dim {
                return Err(Error::Validation(format!(
                    "sample {i} has length {}, dataset dimension is {}",
                    s.vector.len(),
                    self.dim
                )));
            }
            if s.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("sample {i} has non-finite entries")));
            }
            if !self.contents.contains(&s.content) {
                return Err(Error::Validation(format!(
                    "sample {i} uses content {:?} missing from the label table",
                    s.content.name()
                )));
            }
            if !self.styles.contains(&s.style) {
                return Err(Error::Validation(format!(
                    "sample {i} uses style {:?} missing from the label table",
                    s.style.name()
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn samples(&self) -> &[ScoreSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn contents(&self) -> &[ConceptLabel] {
        &self.contents
    }

    pub fn styles(&self) -> &[ConceptLabel] {
        &self.styles
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Samples at a single timestep, as a `T = 1` dataset.
    pub fn at_timestep(&self, t: u32) -> Result<ScoreDataset> {
        self.aggregate(Aggregation::Timestep(t))
    }

    /// Collapses timesteps so that each (content, style, replicate) triple
    /// contributes one `T = 1` sample.
    pub fn aggregate(&self, mode: Aggregation) -> Result<ScoreDataset> {
        if let Aggregation::Timestep(t) = mode {
            if t as usize >= self.timesteps {
                return Err(Error::Argument(format!(
                    "timestep {t} out of range for a dataset with {} timesteps",
                    self.timesteps
                )));
            }
        }
        let mut order: Vec<(ConceptLabel, ConceptLabel, u32)> = Vec::new();
        let mut acc: HashMap<(ConceptLabel, ConceptLabel, u32), (Vec<f64>, usize)> = HashMap::new();
        for s in &self.samples {
            if let Aggregation::Timestep(t) = mode {
                if s.timestep != t {
                    continue;
                }
            }
            let key = (s.content.clone(), s.style.clone(), s.replicate);
            let entry = acc.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (vec![0.0; self.dim], 0)
            });
            for (a, v) in entry.0.iter_mut().zip(&s.vector) {
                *a += v;
            }
            entry.1 += 1;
        }
        let samples = order
            .into_iter()
            .map(|key| {
                let (sum, n) = acc.remove(&key).expect("key recorded on insert");
                let (content, style, replicate) = key;
                ScoreSample {
                    content,
                    style,
                    replicate,
                    timestep: 0,
                    vector: sum.into_iter().map(|v| v / n as f64).collect(),
                }
            })
            .collect();
        Self::with_labels(
            self.dim,
            self.contents.clone(),
            self.styles.clone(),
            samples,
            self.provenance.clone(),
        )
    }

    /// Distinct styles that actually occur in samples, in label-table order.
    pub fn present_styles(&self) -> Vec<ConceptLabel> {
        self.styles
            .iter()
            .filter(|l| self.samples.iter().any(|s| &s.style == *l))
            .cloned()
            .collect()
    }

    pub fn find_content(&self, name: &str) -> Option<&ConceptLabel> {
        self.contents.iter().find(|l| l.name() == name)
    }
}

fn check_table(table: &[ConceptLabel], set: ConceptSet) -> Result<()> {
    for (i, l) in table.iter().enumerate() {
        if l.set() != set {
            return Err(Error::Validation(format!(
                "label {:?} belongs to {:?}, not {set:?}",
                l.name(),
                l.set()
            )));
        }
        if table[..i].contains(l) {
            return Err(Error::Validation(format!("duplicate label {:?}", l.name())));
        }
    }
    Ok(())
}

/// Keeps only samples with the baseline content: the style-varying,
/// content-fixed slice used for subspace estimation.
pub fn subspace_estimation_slice(ds: &ScoreDataset, baseline: &ConceptLabel) -> Result<ScoreDataset> {
    let samples: Vec<ScoreSample> = ds
        .samples()
        .iter()
        .filter(|s| &s.content == baseline)
        .cloned()
        .collect();
    if samples.is_empty() {
        return Err(Error::InsufficientVariation(format!(
            "no samples with baseline content {:?}",
            baseline.name()
        )));
    }
    let slice = ScoreDataset::with_labels(
        ds.dim(),
        vec![baseline.clone()],
        ds.styles().to_vec(),
        samples,
        ds.provenance(),
    )?;
    let styles = slice.present_styles();
    if styles.len() < 2 {
        return Err(Error::InsufficientVariation(format!(
            "baseline content {:?} appears with {} style(s); at least 2 are needed",
            baseline.name(),
            styles.len()
        )));
    }
    ScoreDataset::with_labels(
        slice.dim,
        slice.contents,
        styles,
        slice.samples,
        slice.provenance,
    )
}

#[derive(Debug, Serialize)]
struct ManifestSample<'a> {
    content: usize,
    style: usize,
    replicate: u32,
    file: String,
    sha256: &'a str,
}

fn blob_name(content: usize, style: usize, replicate: u32) -> String {
    format!("s_{content}_{style}_{replicate}.f32")
}

/// Writes `ds` in ingestion format v1 and returns the SHA-256 of the manifest bytes.
pub fn write_dataset(ds: &ScoreDataset, dir: &Path) -> Result<String> {
    let t = ds.timesteps();
    let d = ds.dim();
    let content_idx: HashMap<&ConceptLabel, usize> =
        ds.contents().iter().enumerate().map(|(i, l)| (l, i)).collect();
    let style_idx: HashMap<&ConceptLabel, usize> =
        ds.styles().iter().enumerate().map(|(i, l)| (l, i)).collect();

    // group timesteps per triple, in order of first appearance
    let mut order: Vec<(usize, usize, u32)> = Vec::new();
    let mut groups: HashMap<(usize, usize, u32), Vec<Option<&[f64]>>> = HashMap::new();
    for s in ds.samples() {
        let key = (content_idx[&s.content], style_idx[&s.style], s.replicate);
        let slots = groups.entry(key).or_insert_with(|| {
            order.push(key);
            vec![None; t]
        });
        let slot = &mut slots[s.timestep as usize];
        if slot.is_some() {
            return Err(Error::Validation(format!(
                "duplicate sample for content {:?}, style {:?}, replicate {}, timestep {}",
                s.content.name(),
                s.style.name(),
                s.replicate,
                s.timestep
            )));
        }
        *slot = Some(&s.vector);
    }

    let mut blobs = Vec::with_capacity(order.len());
    for key in &order {
        let slots = &groups[key];
        if let Some(missing) = slots.iter().position(Option::is_none) {
            return Err(Error::Validation(format!(
                "triple (content {}, style {}, replicate {}) is missing timestep {missing}",
                key.0, key.1, key.2
            )));
        }
        let bytes = io::encode_f32(slots.iter().flat_map(|v| v.unwrap().iter().copied()))?;
        debug_assert_eq!(bytes.len(), t * d * 4);
        blobs.push((blob_name(key.0, key.1, key.2), bytes));
    }

    io::create_dir_all(dir)?;
    let mut hashes = Vec::with_capacity(blobs.len());
    for (name, bytes) in &blobs {
        io::write_atomic(&dir.join(name), bytes)?;
        hashes.push(io::sha256_hex(bytes));
    }
    let samples: Vec<ManifestSample> = order
        .iter()
        .zip(&blobs)
        .zip(&hashes)
        .map(|((key, (name, _)), hash)| ManifestSample {
            content: key.0,
            style: key.1,
            replicate: key.2,
            file: name.clone(),
            sha256: hash,
        })
        .collect();
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "dim": d,
        "timesteps": t,
        "labels": {
            "content": ds.contents().iter().map(ConceptLabel::name).collect::<Vec<_>>(),
            "style": ds.styles().iter().map(ConceptLabel::name).collect::<Vec<_>>(),
        },
        "samples": samples,
        "provenance": ds.provenance(),
    });
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serialises");
    bytes.push(b'\n');
    let digest = io::sha256_hex(&bytes);
    io::write_atomic(&dir.join(MANIFEST_FILE), &bytes)?;
    io::write_atomic(&dir.join(DIGEST_FILE), format!("{digest}\n").as_bytes())?;
    Ok(digest)
}

/// Reads a v1 dataset directory, checking blob sizes, blob hashes and the
/// manifest digest sidecar when present.
pub fn read_dataset(dir: &Path) -> Result<ScoreDataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let bytes = io::read_file(&manifest_path)?;
    let digest_path = dir.join(DIGEST_FILE);
    if digest_path.exists() {
        let recorded = String::from_utf8_lossy(&io::read_file(&digest_path)?)
            .trim()
            .to_string();
        let actual = io::sha256_hex(&bytes);
        if recorded != actual {
            return Err(Error::Checksum {
                file: manifest_path,
                expected: recorded,
                actual,
            });
        }
    }
    let manifest = parse_manifest(&bytes)?;

    let d = manifest.dim;
    let t = manifest.timesteps;
    let mut samples = Vec::with_capacity(manifest.samples.len() * t);
    for entry in &manifest.samples {
        let path = dir.join(&entry.file);
        let blob = io::read_file(&path)?;
        let expected = (t * d * 4) as u64;
        if blob.len() as u64 != expected {
            return Err(Error::Corruption {
                file: path,
                expected,
                actual: blob.len() as u64,
            });
        }
        let actual = io::sha256_hex(&blob);
        if actual != entry.sha256 {
            return Err(Error::Checksum {
                file: path,
                expected: entry.sha256.clone(),
                actual,
            });
        }
        let values = io::decode_f32(&blob);
        for (step, chunk) in values.chunks_exact(d).enumerate() {
            samples.push(ScoreSample {
                content: manifest.contents[entry.content].clone(),
                style: manifest.styles[entry.style].clone(),
                replicate: entry.replicate,
                timestep: step as u32,
                vector: chunk.to_vec(),
            });
        }
    }
    let mut ds = ScoreDataset::with_labels(
        d,
        manifest.contents,
        manifest.styles,
        samples,
        manifest.provenance,
    )?;
    ds.timesteps = t;
    Ok(ds)
}

struct Manifest {
    dim: usize,
    timesteps: usize,
    contents: Vec<ConceptLabel>,
    styles: Vec<ConceptLabel>,
    samples: Vec<SampleEntry>,
    provenance: String,
}

struct SampleEntry {
    content: usize,
    style: usize,
    replicate: u32,
    file: String,
    sha256: String,
}

fn parse_manifest(bytes: &[u8]) -> Result<Manifest> {
    let root: Value =
        serde_json::from_slice(bytes).map_err(|e| Error::format("", format!("invalid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::format("", "manifest must be a JSON object"))?;
    let version = uint_at(&root, "/schema_version")?;
    if version != SCHEMA_VERSION {
        return Err(Error::format(
            "/schema_version",
            format!("unsupported schema version {version}, expected {SCHEMA_VERSION}"),
        ));
    }
    let dim = uint_at(&root, "/dim")? as usize;
    if dim == 0 {
        return Err(Error::format("/dim", "must be positive"));
    }
    let timesteps = uint_at(&root, "/timesteps")? as usize;
    if timesteps == 0 {
        return Err(Error::format("/timesteps", "must be positive"));
    }
    let contents = labels_at(&root, "/labels/content", ConceptSet::Content)?;
    let styles = labels_at(&root, "/labels/style", ConceptSet::Style)?;
    let provenance = match obj.get("provenance") {
        None => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(Error::format("/provenance", "expected a string")),
    };

    let list = root
        .pointer("/samples")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::format("/samples", "expected an array"))?;
    let mut samples = Vec::with_capacity(list.len());
    let mut seen = std::collections::HashSet::new();
    for (i, _) in list.iter().enumerate() {
        let base = format!("/samples/{i}");
        let content = uint_at(&root, &format!("{base}/content"))? as usize;
        if content >= contents.len() {
            return Err(Error::format(format!("{base}/content"), "label index out of range"));
        }
        let style = uint_at(&root, &format!("{base}/style"))? as usize;
        if style >= styles.len() {
            return Err(Error::format(format!("{base}/style"), "label index out of range"));
        }
        let replicate = uint_at(&root, &format!("{base}/replicate"))?;
        let replicate = u32::try_from(replicate)
            .map_err(|_| Error::format(format!("{base}/replicate"), "out of range"))?;
        let file = str_at(&root, &format!("{base}/file"))?;
        if file.is_empty() || file.contains(['/', '\\']) || file == "." || file == ".." {
            return Err(Error::format(
                format!("{base}/file"),
                "must be a plain file name inside the dataset directory",
            ));
        }
        let sha256 = str_at(&root, &format!("{base}/sha256"))?;
        if sha256.len() != 64 || !sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::format(format!("{base}/sha256"), "expected 64 hex digits"));
        }
        if !seen.insert((content, style, replicate)) {
            return Err(Error::format(base, "duplicate (content, style, replicate) triple"));
        }
        samples.push(SampleEntry {
            content,
            style,
            replicate,
            file,
            sha256: sha256.to_ascii_lowercase(),
        });
    }
    Ok(Manifest {
        dim,
        timesteps,
        contents,
        styles,
        samples,
        provenance,
    })
}

fn uint_at(root: &Value, pointer: &str) -> Result<u64> {
    match root.pointer(pointer) {
        None => Err(Error::format(pointer, "missing field")),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| Error::format(pointer, "expected a non-negative integer")),
    }
}

fn str_at(root: &Value, pointer: &str) -> Result<String> {
    match root.pointer(pointer) {
        None => Err(Error::format(pointer, "missing field")),
        Some(v) => v
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::format(pointer, "expected a string")),
    }
}

fn labels_at(root: &Value, pointer: &str, set: ConceptSet) -> Result<Vec<ConceptLabel>> {
    let arr = root
        .pointer(pointer)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::format(pointer, "expected an array of labels"))?;
    let mut out: Vec<ConceptLabel> = Vec::with_capacity(arr.len());
    for (i, v) in arr.iter().enumerate() {
        let at = format!("{pointer}/{i}");
        let name = v.as_str().ok_or_else(|| Error::format(&at, "expected a string"))?;
        let label = ConceptLabel::new(set, name).map_err(|e| Error::format(&at, e.to_string()))?;
        if out.contains(&label) {
            return Err(Error::format(&at, format!("duplicate label {name:?}")));
        }
        out.push(label);
    }
    Ok(out)
}

/// Sampling plan: every content × style × replicate rendered through a template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct PromptGrid {
    template: String,
    contents: Vec<ConceptLabel>,
    styles: Vec<ConceptLabel>,
    replicates: u32,
    baseline_content: ConceptLabel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    template: String,
    contents: Vec<String>,
    styles: Vec<String>,
    replicates: u32,
    baseline_content: String,
}

impl TryFrom<RawGrid> for PromptGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        PromptGrid::new(
            raw.template,
            raw.contents,
            raw.styles,
            raw.replicates,
            &raw.baseline_content,
        )
    }
}

impl From<PromptGrid> for RawGrid {
    fn from(g: PromptGrid) -> Self {
        RawGrid {
            template: g.template,
            contents: g.contents.into_iter().map(|l| l.name).collect(),
            styles: g.styles.into_iter().map(|l| l.name).collect(),
            replicates: g.replicates,
            baseline_content: g.baseline_content.name,
        }
    }
}

const CONTENT_SLOT: &str = "{content}";
const STYLE_SLOT: &str = "{style}";

impl PromptGrid {
    pub fn new<S: Into<String>>(
        template: impl Into<String>,
        contents: impl IntoIterator<Item = S>,
        styles: impl IntoIterator<Item = S>,
        replicates: u32,
        baseline_content: &str,
    ) -> Result<Self> {
        let template = template.into();
        for slot in [CONTENT_SLOT, STYLE_SLOT] {
            let n = template.matches(slot).count();
            if n != 1 {
                return Err(Error::Validation(format!(
                    "template must contain {slot} exactly once, found {n}"
                )));
            }
        }
        let contents = contents
            .into_iter()
            .map(ConceptLabel::content)
            .collect::<Result<Vec<_>>>()?;
        let styles = styles
            .into_iter()
            .map(ConceptLabel::style)
            .collect::<Result<Vec<_>>>()?;
        check_table(&contents, ConceptSet::Content)?;
        check_table(&styles, ConceptSet::Style)?;
        if contents.is_empty() || styles.is_empty() {
            return Err(Error::Validation("grid needs at least one content and one style".into()));
        }
        if replicates == 0 {
            return Err(Error::Validation("grid needs at least one replicate".into()));
        }
        let baseline_content = ConceptLabel::content(baseline_content)?;
        if !contents.contains(&baseline_content) {
            return Err(Error::Validation(format!(
                "baseline content {:?} is not among the grid contents",
                baseline_content.name()
            )));
        }
        Ok(Self {
            template,
            contents,
            styles,
            replicates,
            baseline_content,
        })
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn contents(&self) -> &[ConceptLabel] {
        &self.contents
    }

    pub fn styles(&self) -> &[ConceptLabel] {
        &self.styles
    }

    pub fn replicates(&self) -> u32 {
        self.replicates
    }

    pub fn baseline_content(&self) -> &ConceptLabel {
        &self.baseline_content
    }

    pub fn len(&self) -> usize {
        self.contents.len() * self.styles.len() * self.replicates as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Literal substitution into the template; placeholder text inside a
    /// label is never re-expanded.
    pub fn render(&self, content: &ConceptLabel, style: &ConceptLabel) -> String {
        let c = self.template.find(CONTENT_SLOT).expect("validated");
        let s = self.template.find(STYLE_SLOT).expect("validated");
        let (first, first_len, first_val, second, second_len, second_val) = if c < s {
            (c, CONTENT_SLOT.len(), content.name(), s, STYLE_SLOT.len(), style.name())
        } else {
            (s, STYLE_SLOT.len(), style.name(), c, CONTENT_SLOT.len(), content.name())
        };
        let t = &self.template;
        let mut out = String::with_capacity(t.len() + first_val.len() + second_val.len());
        out.push_str(&t[..first]);
        out.push_str(first_val);
        out.push_str(&t[first + first_len..second]);
        out.push_str(second_val);
        out.push_str(&t[second + second_len..]);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedPrompt {
    pub prompt: String,
    pub content: String,
    pub style: String,
    pub replicate: u32,
}

/// Every prompt in the grid, ordered by (content index, style index, replicate).
pub fn render_prompts(grid: &PromptGrid) -> Vec<RenderedPrompt> {
    let mut out = Vec::with_capacity(grid.len());
    for content in grid.contents() {
        for style in grid.styles() {
            let prompt = grid.render(content, style);
            for replicate in 0..grid.replicates() {
                out.push(RenderedPrompt {
                    prompt: prompt.clone(),
                    content: content.name().to_string(),
                    style: style.name().to_string(),
                    replicate,
                });
            }
        }
    }
    out
}
