use std::collections::BTreeMap;
use std::path::Path;

use concept_lens::dataset::{
    read_dataset, subspace_estimation_slice, write_dataset, Aggregation, ConceptLabel, PromptGrid,
    ScoreDataset,
};
use concept_lens::diagnostics::{
    cluster_coords, js_distance_matrix, nearest_style_report, normalize_by_content,
    rank_templates, separability_report, ClusteredCoords, SeparabilityReport,
};
use concept_lens::subspace::{self, ConceptSubspace, EditRequest, SubspaceBundle};
use concept_lens::synthetic::{generate, SyntheticModelSpec, SyntheticRecipe};
use concept_lens::{io, report, Error, Result};
use log::info;

use crate::config::{RunConfig, SilhouetteDims};

fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8], what: &Path) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| Error::Format {
        pointer: String::new(),
        message: format!("{}: {e}", what.display()),
    })
}

fn say(cfg: &RunConfig, line: impl AsRef<str>) {
    if !cfg.quiet {
        println!("{}", line.as_ref());
    }
}

fn warn(cfg: &RunConfig, line: impl AsRef<str>) {
    if !cfg.quiet {
        eprintln!("warning: {}", line.as_ref());
    }
}

/// A spec file is either a full model (it carries `style_basis`) or a recipe.
fn load_model(path: &Path, seed: Option<u64>) -> Result<SyntheticModelSpec> {
    let bytes = io::read_file(path)?;
    let value: serde_json::Value = parse_json(&bytes, path)?;
    if value.get("style_basis").is_some() {
        let mut spec: SyntheticModelSpec = parse_json(&bytes, path)?;
        if let Some(s) = seed {
            spec.seed = s;
        }
        spec.validate()?;
        Ok(spec)
    } else {
        let mut recipe: SyntheticRecipe = parse_json(&bytes, path)?;
        if let Some(s) = seed {
            recipe.seed = s;
        }
        recipe.build()
    }
}

pub fn synth(cfg: &RunConfig, spec_path: &Path, grid_path: &Path) -> Result<()> {
    let out = cfg.out()?;
    let spec = load_model(spec_path, cfg.seed)?;
    let grid: PromptGrid = parse_json(&io::read_file(grid_path)?, grid_path)?;
    let ds = generate(&spec, &grid)?;
    let digest = write_dataset(&ds, out)?;
    info!("spec hash {}", spec.hash());
    say(cfg, format!("{} samples written to {} (manifest sha256 {digest})", ds.len(), out.display()));
    Ok(())
}

fn baseline(cfg: &RunConfig) -> Result<ConceptLabel> {
    let name = cfg
        .baseline
        .as_deref()
        .ok_or_else(|| Error::Argument("--baseline is required".into()))?;
    ConceptLabel::content(name)
}

fn estimate_bundle(cfg: &RunConfig, ds: &ScoreDataset) -> Result<SubspaceBundle> {
    let base = baseline(cfg)?;
    let agg = ds.aggregate(cfg.aggregation)?;
    let aggregate = subspace::estimate(&subspace_estimation_slice(&agg, &base)?, cfg.estimate)?;
    let per_timestep = if ds.timesteps() > 1 {
        subspace::estimate_per_timestep(&subspace_estimation_slice(ds, &base)?, cfg.estimate)?
    } else {
        Vec::new()
    };
    Ok(SubspaceBundle {
        aggregate,
        per_timestep,
        aggregation: cfg.aggregation.to_string(),
        centered: cfg.estimate.center,
    })
}

fn report_deficiency(cfg: &RunConfig, sub: &ConceptSubspace, what: &str) {
    if let Some(requested) = sub.requested_k() {
        warn(
            cfg,
            format!(
                "{what}: requested k={requested} but the data supports only k={}",
                sub.k()
            ),
        );
    }
}

pub fn subspace(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out()?;
    let ds = read_dataset(cfg.single_dataset()?)?;
    let bundle = estimate_bundle(cfg, &ds)?;
    report_deficiency(cfg, &bundle.aggregate, "aggregate subspace");
    for (t, s) in bundle.per_timestep.iter().enumerate() {
        report_deficiency(cfg, s, &format!("timestep {t}"));
    }
    bundle.save(out)?;
    say(
        cfg,
        format!(
            "k={} explained_variance_ratio={}",
            bundle.aggregate.k(),
            bundle.aggregate.explained_variance_ratio()
        ),
    );
    Ok(())
}

fn silhouette_view(cfg: &RunConfig, cc: &ClusteredCoords) -> ClusteredCoords {
    match cfg.silhouette_dims {
        SilhouetteDims::All => cc.clone(),
        SilhouetteDims::Top2 => cc.truncated(2),
    }
}

fn diagnose(cfg: &RunConfig, ds: &ScoreDataset, sub: &ConceptSubspace) -> Result<(ClusteredCoords, SeparabilityReport)> {
    let agg = if ds.timesteps() > 1 {
        ds.aggregate(cfg.aggregation)?
    } else {
        ds.clone()
    };
    let cc = cluster_coords(&agg, sub)?;
    let rep = separability_report(&silhouette_view(cfg, &cc), cfg.thresholds)?;
    Ok((cc, rep))
}

pub fn diag(cfg: &RunConfig, subspace_path: &Path) -> Result<()> {
    let out = cfg.out()?;
    let ds = read_dataset(cfg.single_dataset()?)?;
    let bundle = SubspaceBundle::load(subspace_path)?;
    let (cc, rep) = diagnose(cfg, &ds, &bundle.aggregate)?;
    let js = js_distance_matrix(&cc, cfg.histogram)?;
    let nearest = nearest_style_report(&js)?;

    io::create_dir_all(out)?;
    io::write_atomic(&out.join("coords.csv"), &report::coords_csv(&cc)?)?;
    io::write_atomic(
        &out.join("coords_normalized.csv"),
        &report::coords_csv(&normalize_by_content(&cc)?)?,
    )?;
    io::write_atomic(&out.join("js_matrix.csv"), &report::js_matrix_csv(&js)?)?;
    io::write_atomic(&out.join("js_matrix.json"), &report::json_bytes(&js)?)?;
    io::write_atomic(&out.join("separability.json"), &report::json_bytes(&rep)?)?;
    io::write_atomic(&out.join("nearest_styles.json"), &report::json_bytes(&nearest)?)?;
    say(
        cfg,
        format!(
            "{} silhouette_raw={:.4} silhouette_norm={:.4} delta={:.4}",
            rep.verdict, rep.silhouette_raw, rep.silhouette_norm, rep.delta
        ),
    );
    Ok(())
}

fn label_names(labels: &[ConceptLabel]) -> Vec<&str> {
    let mut v: Vec<&str> = labels.iter().map(ConceptLabel::name).collect();
    v.sort_unstable();
    v
}

pub fn rank(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out()?;
    if cfg.datasets.is_empty() {
        return Err(Error::Argument("rank needs at least one --dataset".into()));
    }
    let sets = cfg
        .datasets
        .iter()
        .map(|p| read_dataset(p).map(|ds| (p, ds)))
        .collect::<Result<Vec<_>>>()?;
    let (first_path, first) = &sets[0];
    for (p, ds) in &sets[1..] {
        if ds.dim() != first.dim() {
            return Err(Error::Validation(format!(
                "{} has D={} but {} has D={}",
                p.display(),
                ds.dim(),
                first_path.display(),
                first.dim()
            )));
        }
        if label_names(ds.contents()) != label_names(first.contents())
            || label_names(ds.styles()) != label_names(first.styles())
        {
            return Err(Error::Validation(format!(
                "{} and {} have different label sets",
                p.display(),
                first_path.display()
            )));
        }
    }
    let mut reports = BTreeMap::new();
    for (p, ds) in &sets {
        let bundle = estimate_bundle(cfg, ds)?;
        report_deficiency(cfg, &bundle.aggregate, &p.display().to_string());
        let (_, rep) = diagnose(cfg, ds, &bundle.aggregate)?;
        if reports.insert(p.display().to_string(), rep).is_some() {
            return Err(Error::Argument(format!("{} given more than once", p.display())));
        }
    }
    let rows = rank_templates(&reports);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        io::create_dir_all(dir)?;
    }
    io::write_atomic(out, &report::json_bytes(&rows)?)?;
    for r in &rows {
        say(
            cfg,
            format!(
                "{} {} delta={:.4} {}",
                r.rank, r.template, r.report.delta, r.report.verdict
            ),
        );
    }
    Ok(())
}

fn read_vectors(path: &Path) -> Result<Vec<f64>> {
    let bytes = io::read_file(path)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Shape(format!(
            "{} is {} bytes, not a whole number of f32 values",
            path.display(),
            bytes.len()
        )));
    }
    Ok(io::decode_f32(&bytes))
}

pub fn edit(cfg: &RunConfig, subspace_path: &Path, orig: &Path, new: &Path) -> Result<()> {
    let out = cfg.out()?;
    let bundle = SubspaceBundle::load(subspace_path)?;
    let d = bundle.aggregate.dim();
    let a = read_vectors(orig)?;
    let b = read_vectors(new)?;
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "original has {} values but new has {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() || a.len() % d != 0 {
        return Err(Error::Shape(format!(
            "{} values do not form whole vectors of dimension {d}",
            a.len()
        )));
    }
    let t = a.len() / d;
    let mut edited = Vec::with_capacity(a.len());
    for (step, (x, y)) in a.chunks_exact(d).zip(b.chunks_exact(d)).enumerate() {
        let sub = bundle.for_timestep(step, t)?;
        edited.extend(subspace::edit(sub, &EditRequest::new(x.to_vec(), y.to_vec())?)?);
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        io::create_dir_all(dir)?;
    }
    io::write_atomic(out, &io::encode_f32(edited)?)?;
    say(cfg, format!("edited {t} vector(s) of dimension {d}"));
    Ok(())
}

pub fn validate(cfg: &RunConfig) -> Result<()> {
    let path = cfg.single_dataset()?;
    let ds = read_dataset(path)?;
    if let Aggregation::Timestep(t) = cfg.aggregation {
        ds.at_timestep(t)?;
    }
    say(
        cfg,
        format!(
            "ok: {} samples, D={}, T={}, {} contents, {} styles",
            ds.len(),
            ds.dim(),
            ds.timesteps(),
            ds.contents().len(),
            ds.styles().len()
        ),
    );
    Ok(())
}
