//! One function per subcommand. Each stage reads the previous stage's files under
//! `out_dir`, writes its own, and records a [`RunManifest`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use patchsvm::cnn::{extract_features, load_weights, read_feature_matrix, seeded_random_network, write_feature_matrix};
use patchsvm::eval::{
    build_cases, evaluate_cases, grid_search, partition_groups, prepare_cases, read_grid_csv, read_groups, render_roc_svg,
    write_grid_csv, write_groups, write_report_csv, write_roc_csv, CvReport, GroupingMode,
};
use patchsvm::patchio::{
    augment_dataset, extract_patches, label_patch, load_image, load_mask, read_patch_dataset, write_patch_dataset, LabeledPatch,
    PatchLabel, MANIFEST_FILE,
};
use patchsvm::trees::{fit_ensemble, importances, project, read_selection_report, select_cumulative, write_selection_report};
use patchsvm::{FeatureMatrix, Label, Network};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::synth::{generate, write_corpus, SynthConfig};

/// Output locations relative to `out_dir`.
pub struct Layout {
    pub out: PathBuf,
}

impl Layout {
    pub fn new(cfg: &PipelineConfig) -> Self {
        Self { out: cfg.out_dir.clone() }
    }
    pub fn patches(&self) -> PathBuf {
        self.out.join("patches")
    }
    pub fn fmat(&self) -> PathBuf {
        self.out.join("features").join("features.fmat")
    }
    pub fn labels(&self) -> PathBuf {
        self.out.join("features").join("labels.csv")
    }
    pub fn selection(&self) -> PathBuf {
        self.out.join("selection").join("selection.csv")
    }
    pub fn groups(&self) -> PathBuf {
        self.out.join("split").join("groups.csv")
    }
    pub fn grid(&self) -> PathBuf {
        self.out.join("grid").join("grid.csv")
    }
    pub fn report_dir(&self) -> PathBuf {
        self.out.join("report")
    }
}

fn require(path: &Path, stage: &'static str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Prerequisite { path: path.to_path_buf(), stage })
    }
}

fn log(stage: &str, msg: impl std::fmt::Display) {
    eprintln!("[{stage}] {msg}");
}

fn finish(mut m: RunManifest, cfg: &PipelineConfig, start: Instant) -> CliResult<RunManifest> {
    let stage = m.stage.clone();
    m.time(&stage, start.elapsed().as_secs_f64());
    m.write(&cfg.out_dir)?;
    Ok(m)
}

pub fn synth(cfg: &PipelineConfig) -> CliResult<RunManifest> {
    let start = Instant::now();
    let mut m = RunManifest::new("synth", cfg.snapshot());
    let dir = cfg.images_dir();
    let corpus = generate(&SynthConfig { images: cfg.synth_images, positives: cfg.synth_positives, size: cfg.synth_size, seed: cfg.seed })?;
    write_corpus(&dir, &corpus)?;
    for s in &corpus {
        m.output(&dir.join(format!("{}.gimg", s.image.id)))?;
        m.output(&dir.join(format!("{}.gmsk", s.image.id)))?;
    }
    log("synth", format!("{} images ({} with masses) in {}", corpus.len(), cfg.synth_positives, dir.display()));
    finish(m, cfg, start)
}

/// Image files in `dir` paired with their masks (`<stem>.gmsk` or `<stem>_mask.png`).
fn image_pairs(dir: &Path) -> CliResult<Vec<(PathBuf, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Data(format!("cannot read image directory {}: {e}", dir.display())))?;
    let mut images: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("");
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("");
            ext == "gimg" || (ext == "png" && !stem.ends_with("_mask"))
        })
        .collect();
    images.sort();
    if images.is_empty() {
        return Err(CliError::Data(format!("no images (.gimg or .png) found in {}", dir.display())));
    }
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    for img in images {
        let stem = img.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let candidates = [dir.join(format!("{stem}.gmsk")), dir.join(format!("{stem}_mask.png"))];
        match candidates.into_iter().find(|c| c.exists()) {
            Some(mask) => pairs.push((img, mask)),
            None => missing.push(stem),
        }
    }
    if !missing.is_empty() {
        return Err(CliError::Data(format!("{} image(s) without a mask: {}", missing.len(), missing.join(", "))));
    }
    Ok(pairs)
}

fn is_blank(p: &LabeledPatch) -> bool {
    let d = p.pixels.data();
    d.iter().all(|&v| v == d[0])
}

/// Keeps at most `cap` patches per class, chosen with the seed, in their original order.
fn subsample(patches: Vec<LabeledPatch>, cap: usize, seed: u64) -> Vec<LabeledPatch> {
    if cap == 0 {
        return patches;
    }
    let mut keep = vec![false; patches.len()];
    for (stream, class) in [Label::Mass, Label::NonMass].into_iter().enumerate() {
        let idx: Vec<usize> = (0..patches.len()).filter(|&i| patches[i].label == class).collect();
        if idx.len() <= cap {
            idx.iter().for_each(|&i| keep[i] = true);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        for k in rand::seq::index::sample(&mut rng, idx.len(), cap) {
            keep[idx[k]] = true;
        }
    }
    patches.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect()
}

pub fn extract_patches_stage(cfg: &PipelineConfig) -> CliResult<RunManifest> {
    let start = Instant::now();
    let mut m = RunManifest::new("extract-patches", cfg.snapshot());
    let pairs = image_pairs(&cfg.images_dir())?;
    let mut base = Vec::new();
    let mut errors = Vec::new();
    let (mut discarded, mut blank) = (0usize, 0usize);
    for (img_path, mask_path) in &pairs {
        let loaded = load_image(img_path).and_then(|img| load_mask(mask_path).map(|mask| (img, mask)));
        let (img, mask) = match loaded {
            Ok(v) => v,
            Err(e) => {
                errors.push(format!("{}: {e}", img_path.display()));
                continue;
            }
        };
        if !mask.matches(&img) {
            errors.push(format!(
                "{}: mask is {}x{} but image is {}x{}",
                img_path.display(),
                mask.rows(),
                mask.cols(),
                img.rows(),
                img.cols()
            ));
            continue;
        }
        m.input(img_path)?;
        m.input(mask_path)?;
        for p in extract_patches(&img, &cfg.patches)? {
            let label = match label_patch(p.origin_row, p.origin_col, &cfg.patches, &mask)? {
                PatchLabel::Mass => Label::Mass,
                PatchLabel::NonMass => Label::NonMass,
                PatchLabel::Discard => {
                    discarded += 1;
                    continue;
                }
            };
            let patch = LabeledPatch::original(p.pixels, label, &img.id, p.origin_row, p.origin_col);
            if cfg.skip_blank && is_blank(&patch) {
                blank += 1;
                continue;
            }
            base.push(patch);
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Data(format!("{} input file(s) failed:\n  {}", errors.len(), errors.join("\n  "))));
    }
    let base = subsample(base, cfg.max_patches_per_class, cfg.seed);
    let (pos, neg) = patchsvm::label::class_counts(&base.iter().map(|p| p.label).collect::<Vec<_>>());
    let dataset = if cfg.augment { augment_dataset(&base)? } else { base };
    let dir = Layout::new(cfg).patches();
    if dir.exists() {
        std::fs::remove_dir_all(&dir)?;
    }
    let records = write_patch_dataset(&dir, &dataset)?;
    m.output(&dir.join(MANIFEST_FILE))?;
    for r in &records {
        m.output(&dir.join(&r.file))?;
    }
    log(
        "extract-patches",
        format!(
            "{} images -> {pos} mass + {neg} non-mass base patches ({discarded} ambiguous discarded, {blank} blank skipped); {} rows written",
            pairs.len(),
            dataset.len()
        ),
    );
    finish(m, cfg, start)
}

fn network(cfg: &PipelineConfig) -> CliResult<Network> {
    match (&cfg.weights, cfg.random_weights) {
        (Some(path), _) => Ok(load_weights(path)?),
        (None, Some(seed)) => Ok(seeded_random_network(seed)),
        (None, None) => Err(CliError::Config("no network weights: set `weights` or pass --random-weights SEED".into())),
    }
}

pub fn extract_features_stage(cfg: &PipelineConfig) -> CliResult<RunManifest> {
    let start = Instant::now();
    let mut m = RunManifest::new("extract-features", cfg.snapshot());
    let layout = Layout::new(cfg);
    let manifest = layout.patches().join(MANIFEST_FILE);
    require(&manifest, "extract-patches")?;
    let net = network(cfg)?;
    if let Some(w) = &cfg.weights {
        m.input(w)?;
    }
    let patches = read_patch_dataset(&layout.patches())?;
    if patches.is_empty() {
        return Err(CliError::Data("patch dataset is empty".into()));
    }
    m.input(&manifest)?;
    for p in &patches {
        m.input(&layout.patches().join(p.file_name()))?;
    }
    log("extract-features", format!("{} patches through the network (tap {})", patches.len(), cfg.tap.as_str()));
    let fm = extract_features(&net, &patches, cfg.tap)?;
    drop(net);
    write_feature_matrix(&layout.fmat(), &layout.labels(), &fm)?;
    m.output(&layout.fmat())?;
    m.output(&layout.labels())?;
    log("extract-features", format!("{} x {} feature matrix", fm.n_rows(), fm.n_cols()));
    finish(m, cfg, start)
}

fn load_features(layout: &Layout, m: &mut RunManifest) -> CliResult<FeatureMatrix> {
    require(&layout.fmat(), "extract-features")?;
    require(&layout.labels(), "extract-features")?;
    m.input(&layout.fmat())?;
    m.input(&layout.labels())?;
    Ok(read_feature_matrix(&layout.fmat(), &layout.labels())?)
}

pub fn select_features_stage(cfg: &PipelineConfig) -> CliResult<RunManifest> {
    let start = Instant::now();
    let mut m = RunManifest::new("select-features", cfg.snapshot());
    let layout = Layout::new(cfg);
    let fm = load_features(&layout, &mut m)?;
    let ens_cfg = patchsvm::trees::EnsembleConfig { seed: cfg.seed, ..cfg.ensemble.clone() };
    let ensemble = fit_ensemble(&fm.values, &fm.labels, &ens_cfg)?;
    let imp = importances(&ensemble);
    let sel = select_cumulative(&imp, cfg.importance_threshold)?;
    write_selection_report(&layout.selection(), &imp, &sel)?;
    m.output(&layout.selection())?;
    log(
        "select-features",
        format!(
            "{} of {} features carry {:.4} of the importance (threshold {})",
            sel.selected_indices.len(),
            fm.n_cols(),
            sel.captured_importance,
            sel.threshold
        ),
    );
    finish(m, cfg, start)
}

pub fn split_stage(cfg: &PipelineConfig) -> CliResult<RunManifest> {
    let start = Instant::now();
    let mut m = RunManifest::new("split", cfg.snapshot());
    let layout = Layout::new(cfg);
    require(&layout.labels(), "extract-features")?;
    m.input(&layout.labels())?;
    let (labels, provenance) = patchsvm::cnn::read_label_manifest(&layout.labels())?;
    let mode = if cfg.paper_faithful_rows { GroupingMode::ByRow } else { GroupingMode::BySource };
    let groups = partition_groups(&provenance, &labels, cfg.seed, mode)?;
    write_groups(&layout.groups(), &groups, &provenance, &labels)?;
    m.output(&layout.groups())?;
    for case in build_cases(&groups) {
        log(
            "split",
            format!("case {}: train {} / validation {} / test {} rows", case.describe(), case.train.len(), case.validation.len(), case.test.len()),
        );
    }
    finish(m, cfg, start)
}

/// Selected-feature matrix in `f64` plus the five rotation cases.
fn load_cases(cfg: &PipelineConfig, m: &mut RunManifest) -> CliResult<Vec<patchsvm::eval::PreparedCase<f64>>> {
    let layout = Layout::new(cfg);
    require(&layout.selection(), "select-features")?;
    require(&layout.groups(), "split")?;
    let fm = load_features(&layout, m)?;
    m.input(&layout.selection())?;
    m.input(&layout.groups())?;
    let sel = read_selection_report(&layout.selection())?;
    let groups = read_groups(&layout.groups())?;
    if groups.assignment.len() != fm.n_rows() {
        return Err(CliError::Data(format!(
            "group file covers {} rows but the feature matrix has {}; rerun `split`",
            groups.assignment.len(),
            fm.n_rows()
        )));
    }
    let projected = project(&fm, &sel)?.cast::<f64>();
    Ok(prepare_cases(&projected, &build_cases(&groups)))
}

pub fn grid_search_stage(cfg: &PipelineConfig) -> CliResult<RunManifest> {
    let start = Instant::now();
    let mut m = RunManifest::new("grid-search", cfg.snapshot());
    let cases = load_cases(cfg, &mut m)?;
    let mut results = Vec::new();
    for &family in &cfg.families {
        let t = Instant::now();
        let res = grid_search(&cases, family, cfg.grid.values(family), &cfg.kernel, &cfg.solver)?;
        for cell in &res.cells {
            let mean = cell.mean_auc().map_or("failed".to_string(), |a| format!("{a:.5}"));
            log("grid-search", format!("{} {}={}: mean validation AUC {mean}", family.as_str(), family.param_name(), cell.param));
        }
        log("grid-search", format!("{} best {}={} (AUC {:.5})", family.as_str(), family.param_name(), res.best_param, res.best_mean_auc));
        m.time(family.as_str(), t.elapsed().as_secs_f64());
        results.push(res);
    }
    debug_assert!(cases.iter().all(|c| c.test_reads() == 0));
    let path = Layout::new(cfg).grid();
    write_grid_csv(&path, &results)?;
    m.output(&path)?;
    finish(m, cfg, start)
}

pub fn evaluate_stage(cfg: &PipelineConfig) -> CliResult<(RunManifest, Vec<CvReport>)> {
    let start = Instant::now();
    let mut m = RunManifest::new("evaluate", cfg.snapshot());
    let layout = Layout::new(cfg);
    require(&layout.grid(), "grid-search")?;
    let cases = load_cases(cfg, &mut m)?;
    m.input(&layout.grid())?;
    let best = read_grid_csv(&layout.grid())?;
    let dir = layout.report_dir();
    let mut reports = Vec::new();
    for &family in &cfg.families {
        let &(_, param, _) = best
            .iter()
            .find(|(f, _, _)| *f == family)
            .ok_or_else(|| CliError::Data(format!("grid table has no {} result; rerun `grid-search`", family.as_str())))?;
        let report = evaluate_cases(&cases, family, param, &cfg.kernel, &cfg.solver)?;
        let name = family.as_str();
        let csv = dir.join(format!("report_{name}.csv"));
        write_report_csv(&csv, &report)?;
        m.output(&csv)?;
        for c in &report.cases {
            let roc = dir.join(format!("roc_{name}_case_{}.csv", c.id));
            write_roc_csv(&roc, &c.roc)?;
            m.output(&roc)?;
        }
        let svg = dir.join(format!("roc_{name}.svg"));
        let title = format!("{name}, {}={param}, tap {}: {}", family.param_name(), cfg.tap.as_str(), report.summary);
        patchsvm::fsutil::write_string_atomic(&svg, &render_roc_svg(&report, &title))?;
        m.output(&svg)?;
        for t in &report.timings {
            m.time(&format!("{name} {}", t.stage), t.seconds);
        }
        log("evaluate", format!("{name} ({}={param}): test AUCs {:?} -> {}", family.param_name(), report.aucs(), report.summary));
        reports.push(report);
    }
    Ok((finish(m, cfg, start)?, reports))
}

/// All stages from patch extraction to evaluation, in order.
pub fn run_pipeline(cfg: &PipelineConfig) -> CliResult<(Vec<RunManifest>, Vec<CvReport>)> {
    let start = Instant::now();
    let mut manifests = vec![
        extract_patches_stage(cfg)?,
        extract_features_stage(cfg)?,
        select_features_stage(cfg)?,
        split_stage(cfg)?,
        grid_search_stage(cfg)?,
    ];
    let (eval, reports) = evaluate_stage(cfg)?;
    manifests.push(eval);
    let mut m = RunManifest::new("run-pipeline", cfg.snapshot());
    for s in &manifests {
        m.inputs.extend(s.inputs.iter().filter(|(k, _)| !manifests.iter().any(|o| o.outputs.contains_key(*k))).map(|(k, v)| (k.clone(), v.clone())));
        m.outputs.extend(s.outputs.clone());
        m.timings.extend(s.timings.iter().filter(|t| t.stage == s.stage).cloned());
    }
    manifests.push(finish(m, cfg, start)?);
    Ok((manifests, reports))
}
