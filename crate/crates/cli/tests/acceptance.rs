//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use concept_lens::dataset::{
    read_dataset, subspace_estimation_slice, write_dataset, ConceptLabel, PromptGrid,
    ScoreDataset, ScoreSample,
};
use concept_lens::diagnostics::{
    cluster_coords, js_distance_matrix, separability_report, silhouette, ClusteredCoords,
    HistogramConfig, SeparabilityReport, Thresholds, Verdict,
};
use concept_lens::subspace::{self, ConceptSubspace, EditRequest, EstimateOptions, KSelection};
use concept_lens::synthetic::{generate, style_variation_basis, true_style_projector, SyntheticRecipe};
use concept_lens::tensor::{self, Matrix};
use concept_lens::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 10;
const LAMBDAS: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 2.0];
const TEMPLATE: &str = "a picture of {content} in the style of {style}";

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn recipe(seed: u64, lambda: f64, sigma: f64) -> SyntheticRecipe {
    let mut r = SyntheticRecipe::defaults(seed);
    r.entanglement_strength = lambda;
    r.noise_sigma = sigma;
    r
}

fn grid_for(r: &SyntheticRecipe, contents: &[String], replicates: u32) -> PromptGrid {
    PromptGrid::new(TEMPLATE, contents.iter().cloned(), r.styles.iter().cloned(), replicates, &contents[0])
        .unwrap()
}

fn fixed_k(k: usize) -> EstimateOptions {
    EstimateOptions {
        k: KSelection::Fixed(k),
        center: true,
    }
}

fn baseline() -> ConceptLabel {
    ConceptLabel::content("content0").unwrap()
}

fn synthetic_report(seed: u64, lambda: f64) -> SeparabilityReport {
    let r = recipe(seed, lambda, 0.1);
    let ds = generate(&r.build().unwrap(), &grid_for(&r, &r.contents, 20)).unwrap();
    let sub = subspace::estimate(
        &subspace_estimation_slice(&ds, &baseline()).unwrap(),
        fixed_k(r.style_rank),
    )
    .unwrap();
    separability_report(&cluster_coords(&ds, &sub).unwrap(), Thresholds::default()).unwrap()
}

fn separable_baseline() -> Outcome {
    let start = Instant::now();
    let reports: Vec<SeparabilityReport> = (0..SEEDS).map(|s| synthetic_report(s, 0.0)).collect();
    let elapsed = start.elapsed().as_secs_f64();
    let mean_abs = reports.iter().map(|r| r.delta.abs()).sum::<f64>() / SEEDS as f64;
    let separable = reports.iter().filter(|r| r.verdict == Verdict::Separable).count();
    check(
        mean_abs < 0.05 && separable >= 9 && elapsed < 30.0,
        format!("mean |delta| = {mean_abs:.4} (< 0.05), SEPARABLE {separable}/10 (>= 9), {elapsed:.2}s (< 30s)"),
    )
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
    let mut r = vec![0.0; v.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn monotonicity() -> Outcome {
    let mut means = Vec::new();
    let mut entangled_at_2 = 0;
    for lambda in LAMBDAS {
        let reports: Vec<SeparabilityReport> = (0..SEEDS).map(|s| synthetic_report(s, lambda)).collect();
        means.push(reports.iter().map(|r| r.delta).sum::<f64>() / SEEDS as f64);
        if lambda == 2.0 {
            entangled_at_2 = reports.iter().filter(|r| r.verdict == Verdict::Entangled).count();
        }
    }
    let strictly = means.windows(2).all(|w| w[1] > w[0]);
    let rho = pearson(&ranks(&LAMBDAS), &ranks(&means));
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.4}")).collect();
    check(
        strictly && rho == 1.0 && entangled_at_2 >= 9,
        format!(
            "mean delta [{}] strictly increasing = {strictly}, spearman = {rho}, ENTANGLED at 2.0: {entangled_at_2}/10",
            shown.join(", ")
        ),
    )
}

fn recovery() -> Outcome {
    let baseline_only = vec!["content0".to_string()];
    let mut worst_angle: f64 = 0.0;
    for seed in 0..SEEDS {
        let r = recipe(seed, 0.0, 0.0);
        let spec = r.build().unwrap();
        let ds = generate(&spec, &grid_for(&r, &baseline_only, 3)).unwrap();
        let slice = subspace_estimation_slice(&ds, &baseline()).unwrap();
        let sub = subspace::estimate(&slice, fixed_k(r.style_rank)).unwrap();
        let truth = style_variation_basis(&spec, slice.styles()).unwrap();
        worst_angle = worst_angle.max(tensor::max_principal_angle(sub.basis(), &truth).unwrap());
    }
    let mut errors = Vec::new();
    for n in [50u32, 200, 800] {
        let mut total = 0.0;
        for seed in 0..20 {
            let r = recipe(seed, 0.0, 0.1);
            let spec = r.build().unwrap();
            let reps = n / r.styles.len() as u32;
            let ds = generate(&spec, &grid_for(&r, &baseline_only, reps)).unwrap();
            assert_eq!(ds.len(), n as usize);
            let sub = subspace::estimate(&ds, fixed_k(r.style_rank)).unwrap();
            let diff = sub.projector().unwrap().sub(&true_style_projector(&spec).unwrap()).unwrap();
            total += diff.frobenius_norm();
        }
        errors.push(total / 20.0);
    }
    let non_increasing = errors.windows(2).all(|w| w[1] <= w[0]);
    check(
        worst_angle < 1e-6 && non_increasing,
        format!(
            "sigma=0 max angle {worst_angle:.3e} rad (< 1e-6); sigma=0.1 mean projector error N=50/200/800: {:.5}/{:.5}/{:.5} non-increasing = {non_increasing}",
            errors[0], errors[1], errors[2]
        ),
    )
}

// Box-Muller keeps the suite independent of the sampler the library uses.
fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let (u1, u2): (f64, f64) = (rng.random(), rng.random());
            (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect()
}

// P = BᵀB written out longhand.
fn projector(basis: &Matrix) -> Vec<Vec<f64>> {
    let (k, d) = (basis.rows(), basis.cols());
    (0..d)
        .map(|i| (0..d).map(|j| (0..k).map(|r| basis.get(r, i) * basis.get(r, j)).sum()).collect())
        .collect()
}

fn apply(p: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    p.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn edit_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut comp, mut repl, mut idem) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let d = rng.random_range(2..=32);
        let k = rng.random_range(1..=d);
        let raw = Matrix::new(k, d, gaussian(&mut rng, k * d)).unwrap();
        let basis = tensor::orthonormalize_rows(&raw).unwrap();
        let eig: Vec<f64> = (0..k).rev().map(|i| i as f64 + 1.0).collect();
        let sub = ConceptSubspace::new(basis.clone(), eig, vec![0.0; d], baseline(), 1.0).unwrap();
        let orig = gaussian(&mut rng, d);
        let new = gaussian(&mut rng, d);
        let edited = subspace::edit(&sub, &EditRequest::new(orig.clone(), new.clone()).unwrap()).unwrap();
        let p = projector(&basis);
        let (po, pn, pe) = (apply(&p, &orig), apply(&p, &new), apply(&p, &edited));
        let co: Vec<f64> = orig.iter().zip(&po).map(|(a, b)| a - b).collect();
        let ce: Vec<f64> = edited.iter().zip(&pe).map(|(a, b)| a - b).collect();
        comp = comp.max(max_diff(&co, &ce));
        repl = repl.max(max_diff(&pe, &pn));
        let again = subspace::edit(&sub, &EditRequest::new(edited.clone(), new.clone()).unwrap()).unwrap();
        idem = idem.max(max_diff(&again, &edited));
    }
    check(
        comp <= 1e-10 && repl <= 1e-10 && idem <= 1e-10,
        format!("1000 triples: complement {comp:.2e}, replacement {repl:.2e}, idempotence {idem:.2e} (each <= 1e-10)"),
    )
}

fn naive_silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let clusters: Vec<usize> = {
        let mut c = labels.to_vec();
        c.sort_unstable();
        c.dedup();
        c
    };
    let mut total = 0.0;
    for i in 0..points.len() {
        let own: Vec<usize> = (0..points.len()).filter(|&j| j != i && labels[j] == labels[i]).collect();
        if own.is_empty() {
            continue;
        }
        let a = own.iter().map(|&j| dist(&points[i], &points[j])).sum::<f64>() / own.len() as f64;
        let mut b = f64::INFINITY;
        for &c in &clusters {
            if c == labels[i] {
                continue;
            }
            let other: Vec<usize> = (0..points.len()).filter(|&j| labels[j] == c).collect();
            let m = other.iter().map(|&j| dist(&points[i], &points[j])).sum::<f64>() / other.len() as f64;
            b = b.min(m);
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / points.len() as f64
}

fn silhouette_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=50);
        let k = rng.random_range(1..=8);
        let groups = rng.random_range(2..=n.min(6));
        let mut labels: Vec<usize> = (0..n).map(|i| if i < groups { i } else { rng.random_range(0..groups) }).collect();
        labels.rotate_left(rng.random_range(0..n));
        let points: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| gaussian(&mut rng, k).into_iter().map(|x| x + l as f64).collect())
            .collect();
        let names: Vec<String> = labels.iter().map(|l| format!("s{l}")).collect();
        let cc = ClusteredCoords::from_labeled(points.clone(), &names, &vec!["c"; n]).unwrap();
        worst = worst.max((silhouette(&cc).unwrap() - naive_silhouette(&points, &labels)).abs());
    }
    let cc = ClusteredCoords::from_labeled(
        vec![vec![0.0], vec![0.2], vec![1.0], vec![1.2]],
        &["a", "a", "b", "b"],
        &["c"; 4],
    )
    .unwrap();
    let got = silhouette(&cc).unwrap();
    // s(0.0) = s(1.2) = (1.1 - 0.2) / 1.1, s(0.2) = s(1.0) = (0.9 - 0.2) / 0.9
    let hand = (0.9 / 1.1 + 0.7 / 0.9) / 2.0;
    check(
        worst <= 1e-9 && (got - hand).abs() <= 1e-4,
        format!("100 datasets max |diff| {worst:.2e} (<= 1e-9); 1-D case {got:.6} vs hand-derived {hand:.6}"),
    )
}

fn js_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cfg = HistogramConfig {
        bins: 32,
        smoothing: 1e-9,
    };
    let mut violations = Vec::new();
    for t in 0..200 {
        let mut coords = Vec::new();
        let mut styles = Vec::new();
        for s in 0..3 {
            let n = rng.random_range(5..=60);
            let (cx, cy) = (3.0 * rng.random::<f64>(), 3.0 * rng.random::<f64>());
            let spread = 0.1 + rng.random::<f64>();
            for _ in 0..n {
                let g = gaussian(&mut rng, 2);
                coords.push(vec![cx + spread * g[0], cy + spread * g[1]]);
                styles.push(format!("s{s}"));
            }
        }
        let cc = ClusteredCoords::from_labeled(coords, &styles, &vec!["c"; styles.len()]).unwrap();
        let m = js_distance_matrix(&cc, cfg).unwrap().values;
        for i in 0..3 {
            if m[i][i] != 0.0 {
                violations.push(format!("triple {t}: diagonal {}", m[i][i]));
            }
            for j in 0..3 {
                if m[i][j] != m[j][i] || !(0.0..=1.0).contains(&m[i][j]) {
                    violations.push(format!("triple {t}: entry ({i},{j})"));
                }
                for k in 0..3 {
                    if m[i][k] > m[i][j] + m[j][k] + 1e-12 {
                        violations.push(format!("triple {t}: triangle ({i},{j},{k})"));
                    }
                }
            }
        }
    }
    let cloud: Vec<Vec<f64>> = (0..50).map(|_| gaussian(&mut rng, 2)).collect();
    let mut twin = cloud.clone();
    twin.extend(cloud.iter().cloned());
    let labels: Vec<&str> = (0..100).map(|i| if i < 50 { "a" } else { "b" }).collect();
    let same = js_distance_matrix(&ClusteredCoords::from_labeled(twin, &labels, &["c"; 100]).unwrap(), cfg)
        .unwrap()
        .values[0][1];
    let mut apart = cloud.clone();
    apart.extend(cloud.iter().map(|p| vec![p[0] + 100.0, p[1] + 100.0]));
    let disjoint = js_distance_matrix(&ClusteredCoords::from_labeled(apart, &labels, &["c"; 100]).unwrap(), cfg)
        .unwrap()
        .values[0][1];
    check(
        violations.is_empty() && same == 0.0 && disjoint >= 0.999,
        format!(
            "200 triples, {} violation(s){}; identical {same}; disjoint {disjoint:.6} (>= 0.999)",
            violations.len(),
            violations.first().map(|v| format!(" e.g. {v}")).unwrap_or_default()
        ),
    )
}

fn threshold_fixtures() -> Outcome {
    let cases = [
        (0.33, 0.61, Verdict::Entangled),
        (0.61, 0.63, Verdict::Separable),
        (-0.17, 0.54, Verdict::Entangled),
        (0.11, 0.11, Verdict::Inexpressive),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (raw, norm, want) in cases {
        let got = SeparabilityReport::from_scores(raw, norm, Thresholds::default()).unwrap().verdict;
        ok &= got == want;
        parts.push(format!("({raw}, {norm}) -> {got}"));
    }
    check(ok, parts.join(", "))
}

fn f32_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.random_range(0..10) {
            0 => f32::MIN_POSITIVE,
            1 => -f32::MAX,
            2 => -0.0,
            _ => (rng.random::<f32>() - 0.5) * 1e4,
        } as f64)
        .collect()
}

fn random_dataset(rng: &mut ChaCha8Rng, force_multi_step: bool) -> ScoreDataset {
    let d = rng.random_range(1..=16);
    let t = if force_multi_step { rng.random_range(2..=5) } else { 1 };
    let mut samples = Vec::new();
    for c in 0..rng.random_range(1..=3) {
        for s in 0..rng.random_range(1..=3) {
            for r in 0..rng.random_range(1..=3u32) {
                for step in 0..t {
                    samples.push(ScoreSample {
                        content: ConceptLabel::content(format!("Content {c}")).unwrap(),
                        style: ConceptLabel::style(format!("style-{s}")).unwrap(),
                        replicate: r * 7,
                        timestep: step as u32,
                        vector: f32_values(rng, d),
                    });
                }
            }
        }
    }
    ScoreDataset::new(d, samples, format!("random:{}", rng.random::<u32>())).unwrap()
}

type SampleKey = (String, String, u32, u32);

fn keyed(ds: &ScoreDataset) -> BTreeMap<SampleKey, Vec<u64>> {
    ds.samples()
        .iter()
        .map(|s| {
            (
                (s.content.name().to_string(), s.style.name().to_string(), s.replicate, s.timestep),
                s.vector.iter().map(|v| v.to_bits()).collect(),
            )
        })
        .collect()
}

fn rewrite_manifest(dir: &Path, f: impl FnOnce(&mut serde_json::Value)) {
    let path = dir.join("manifest.json");
    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(&path, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
    let _ = std::fs::remove_file(dir.join("manifest.sha256"));
}

fn ingestion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let tmp = tempfile::tempdir().unwrap();
    let mut mismatches = 0;
    let mut multi = 0;
    for i in 0..50 {
        let ds = random_dataset(&mut rng, i % 2 == 0);
        multi += usize::from(ds.timesteps() > 1);
        let dir = tmp.path().join(format!("ds{i}"));
        write_dataset(&ds, &dir).unwrap();
        let back = read_dataset(&dir).unwrap();
        let same = back.dim() == ds.dim()
            && back.timesteps() == ds.timesteps()
            && back.contents() == ds.contents()
            && back.styles() == ds.styles()
            && back.provenance() == ds.provenance()
            && keyed(&back) == keyed(&ds);
        mismatches += usize::from(!same);
    }

    let fixture = |name: &str| -> PathBuf {
        let dir = tmp.path().join(name);
        let sample = ScoreSample {
            content: ConceptLabel::content("chicken").unwrap(),
            style: ConceptLabel::style("Chinese").unwrap(),
            replicate: 0,
            timestep: 0,
            vector: (0..8).map(f64::from).collect(),
        };
        write_dataset(&ScoreDataset::new(8, vec![sample], "fixture").unwrap(), &dir).unwrap();
        dir
    };
    let mut fixtures = Vec::new();

    let dir = fixture("truncated");
    let blob = dir.join("s_0_0_0.f32");
    let bytes = std::fs::read(&blob).unwrap();
    std::fs::write(&blob, &bytes[..28]).unwrap();
    fixtures.push((
        "28-byte blob for D=8",
        matches!(read_dataset(&dir), Err(Error::Corruption { expected: 32, actual: 28, .. })),
    ));

    let dir = fixture("flipped");
    let blob = dir.join("s_0_0_0.f32");
    let mut bytes = std::fs::read(&blob).unwrap();
    bytes[5] ^= 0x40;
    std::fs::write(&blob, &bytes).unwrap();
    fixtures.push(("flipped blob byte", matches!(read_dataset(&dir), Err(Error::Checksum { .. }))));

    let dir = fixture("version");
    rewrite_manifest(&dir, |v| v["schema_version"] = 2.into());
    fixtures.push((
        "schema_version 2",
        matches!(read_dataset(&dir), Err(Error::Format { ref pointer, .. }) if pointer == "/schema_version"),
    ));

    let dir = fixture("missing-dim");
    rewrite_manifest(&dir, |v| {
        v.as_object_mut().unwrap().remove("dim");
    });
    fixtures.push((
        "missing dim",
        matches!(read_dataset(&dir), Err(Error::Format { ref pointer, .. }) if pointer == "/dim"),
    ));

    let dir = fixture("bad-label-index");
    rewrite_manifest(&dir, |v| v["samples"][0]["style"] = 3.into());
    fixtures.push((
        "style index out of range",
        matches!(read_dataset(&dir), Err(Error::Format { ref pointer, .. }) if pointer == "/samples/0/style"),
    ));

    let failed: Vec<&str> = fixtures.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    check(
        mismatches == 0 && multi > 0 && failed.is_empty(),
        format!(
            "50 datasets ({multi} with T>1), {mismatches} mismatch(es); {} fixtures, failing: [{}]",
            fixtures.len(),
            failed.join(", ")
        ),
    )
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_concept-lens")
}

fn run_pipeline(root: &Path) {
    let recipe = serde_json::to_vec(&recipe(7, 0.5, 0.1)).unwrap();
    std::fs::write(root.join("spec.json"), recipe).unwrap();
    let r = SyntheticRecipe::defaults(7);
    let grid = serde_json::to_vec(&grid_for(&r, &r.contents, 20)).unwrap();
    std::fs::write(root.join("grid.json"), grid).unwrap();
    let steps: [&[&str]; 3] = [
        &["synth", "--spec", "spec.json", "--grid", "grid.json", "--out", "ds"],
        &["subspace", "--dataset", "ds", "--baseline", "content0", "--k", "4", "--out", "sub/subspace.json"],
        &["diag", "--dataset", "ds", "--subspace", "sub/subspace.json", "--out", "diag"],
    ];
    for args in steps {
        let status = Command::new(bin()).args(args).arg("--quiet").current_dir(root).status().unwrap();
        assert!(status.success(), "{args:?} failed");
    }
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["ds", "sub", "diag"] {
        for e in std::fs::read_dir(root.join(sub)).unwrap() {
            let p = e.unwrap().path();
            out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
        }
    }
    out
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_pipeline(a.path());
    run_pipeline(b.path());
    let (fa, fb) = (files(a.path()), files(b.path()));
    let differing: Vec<String> = fa
        .iter()
        .filter(|(p, bytes)| fb.get(*p) != Some(bytes))
        .map(|(p, _)| p.display().to_string())
        .collect();
    check(
        fa.len() == fb.len() && differing.is_empty(),
        format!("{} files compared, differing: [{}]", fa.len(), differing.join(", ")),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("separable baseline", separable_baseline),
        ("entanglement monotonicity", monotonicity),
        ("subspace recovery", recovery),
        ("edit algebra", edit_algebra),
        ("silhouette oracle", silhouette_oracle),
        ("JS metric axioms", js_axioms),
        ("threshold fixtures", threshold_fixtures),
        ("ingestion round-trip", ingestion),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>().map(String::as_str).or(e.downcast_ref::<&str>().copied()))));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
