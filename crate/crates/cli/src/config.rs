//! `key = value` pipeline configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use patchsvm::cnn::Tap;
use patchsvm::eval::{Family, GridSpec};
use patchsvm::patchio::PatchGridConfig;
use patchsvm::svm::{Gamma, KernelSpec, SolverConfig};
use patchsvm::trees::{EnsembleConfig, Splitter, DEFAULT_THRESHOLD};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub gamma: Gamma<f64>,
    pub degree: u32,
    pub coef0: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { gamma: Gamma::Scale, degree: 3, coef0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    /// Input images; defaults to the synthetic corpus directory.
    pub images_dir: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub random_weights: Option<u64>,
    pub tap: Tap,
    pub augment: bool,
    pub skip_blank: bool,
    pub paper_faithful_rows: bool,
    /// Seeded cap on base patches per class (0 keeps all).
    pub max_patches_per_class: usize,
    pub patches: PatchGridConfig,
    pub ensemble: EnsembleConfig,
    pub importance_threshold: f64,
    pub kernel: KernelSpec<f64>,
    /// Last `gamma`, `degree` and `coef0` given, kept even while `kernel` ignores them.
    pub kernel_params: KernelParams,
    pub families: Vec<Family>,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub synth_images: usize,
    pub synth_positives: usize,
    pub synth_size: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out_dir: PathBuf::from("run"),
            images_dir: None,
            weights: None,
            random_weights: None,
            tap: Tap::Fc2,
            augment: false,
            skip_blank: false,
            paper_faithful_rows: false,
            max_patches_per_class: 0,
            patches: PatchGridConfig::default(),
            ensemble: EnsembleConfig::default(),
            importance_threshold: DEFAULT_THRESHOLD,
            kernel: KernelSpec::rbf_scale(),
            kernel_params: KernelParams::default(),
            families: vec![Family::CSvm, Family::NuSvm],
            grid: GridSpec::default(),
            solver: SolverConfig::default(),
            synth_images: 100,
            synth_positives: 50,
            synth_size: 760,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.parse().map_err(|_| CliError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

fn parse_list(key: &str, value: &str) -> CliResult<Vec<f64>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn parse_optional(key: &str, value: &str) -> CliResult<Option<usize>> {
    if value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn gamma_of(g: Gamma<f64>) -> String {
    match g {
        Gamma::Value(g) => g.to_string(),
        Gamma::Scale => "scale".into(),
    }
}

impl PipelineConfig {
    /// Parses a config file: `key = value` lines, `#` comments. A `.json` path is read
    /// as a run manifest and its config snapshot is used.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: crate::manifest::RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{} is not a run manifest: {e}", path.display())))?;
            for (k, v) in &manifest.config {
                cfg.set(k, v)?;
            }
            return Ok(cfg);
        }
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{line}`", n + 1)))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(CliError::Config(format!("line {}: duplicate key `{k}`", n + 1)));
            }
            self.set(k, v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let path = || PathBuf::from(value);
        match key {
            "seed" => self.seed = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "out_dir" => self.out_dir = path(),
            "images_dir" => self.images_dir = (value != "none").then(path),
            "weights" => self.weights = (value != "none").then(path),
            "random_weights" => self.random_weights = if value == "none" { None } else { Some(parse(key, value)?) },
            "tap" => self.tap = value.parse().map_err(|_| CliError::Config(format!("tap must be fc2 or flatten, got `{value}`")))?,
            "augment" => self.augment = parse_bool(key, value)?,
            "skip_blank" => self.skip_blank = parse_bool(key, value)?,
            "paper_faithful_rows" => self.paper_faithful_rows = parse_bool(key, value)?,
            "max_patches_per_class" => self.max_patches_per_class = parse(key, value)?,
            "patch_height" => self.patches.patch_height = parse(key, value)?,
            "patch_width" => self.patches.patch_width = parse(key, value)?,
            "stride" => self.patches.stride = parse(key, value)?,
            "positive_overlap_min" => self.patches.positive_overlap_min = parse(key, value)?,
            "n_trees" => self.ensemble.n_trees = parse(key, value)?,
            "max_features" => self.ensemble.max_features = if value == "sqrt" { None } else { Some(parse(key, value)?) },
            "min_samples_split" => self.ensemble.min_samples_split = parse(key, value)?,
            "max_depth" => self.ensemble.max_depth = parse_optional(key, value)?,
            "splitter" => {
                self.ensemble.splitter = match value {
                    "extra-trees" => Splitter::Random,
                    "random-forest" => Splitter::Best,
                    _ => return Err(CliError::Config(format!("splitter must be extra-trees or random-forest, got `{value}`"))),
                }
            }
            "bootstrap" => self.ensemble.bootstrap = parse_bool(key, value)?,
            "importance_threshold" => self.importance_threshold = parse(key, value)?,
            "kernel" => {
                let KernelParams { gamma, degree, coef0 } = self.kernel_params;
                self.kernel = match value {
                    "rbf" => KernelSpec::Rbf { gamma },
                    "linear" => KernelSpec::Linear,
                    "polynomial" => KernelSpec::Polynomial { degree, gamma, coef0 },
                    "sigmoid" => KernelSpec::Sigmoid { gamma, coef0 },
                    _ => return Err(CliError::Config(format!("unknown kernel `{value}`"))),
                }
            }
            "gamma" => {
                let g = if value == "scale" { Gamma::Scale } else { Gamma::Value(parse(key, value)?) };
                self.kernel_params.gamma = g;
                match &mut self.kernel {
                    KernelSpec::Rbf { gamma } | KernelSpec::Polynomial { gamma, .. } | KernelSpec::Sigmoid { gamma, .. } => *gamma = g,
                    KernelSpec::Linear => {}
                }
            }
            "degree" => {
                let d = parse(key, value)?;
                self.kernel_params.degree = d;
                if let KernelSpec::Polynomial { degree, .. } = &mut self.kernel {
                    *degree = d;
                }
            }
            "coef0" => {
                let c = parse(key, value)?;
                self.kernel_params.coef0 = c;
                if let KernelSpec::Polynomial { coef0, .. } | KernelSpec::Sigmoid { coef0, .. } = &mut self.kernel {
                    *coef0 = c;
                }
            }
            "families" => {
                self.families = value
                    .split(',')
                    .map(|f| match f.trim() {
                        "c-svm" => Ok(Family::CSvm),
                        "nu-svm" => Ok(Family::NuSvm),
                        other => Err(CliError::Config(format!("unknown family `{other}`"))),
                    })
                    .collect::<CliResult<_>>()?
            }
            "c_grid" => self.grid.c_values = parse_list(key, value)?,
            "nu_grid" => self.grid.nu_values = parse_list(key, value)?,
            "kkt_tolerance" => self.solver.kkt_tolerance = parse(key, value)?,
            "max_iterations" => self.solver.max_iterations = parse(key, value)?,
            "cache_size" => self.solver.cache_size = parse(key, value)?,
            "synth_images" => self.synth_images = parse(key, value)?,
            "synth_positives" => self.synth_positives = parse(key, value)?,
            "synth_size" => self.synth_size = parse(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Kernel parameters in effect: the kernel's own where it has them, else the recorded ones.
    fn effective_params(&self) -> KernelParams {
        let mut p = self.kernel_params;
        match self.kernel {
            KernelSpec::Rbf { gamma } => p.gamma = gamma,
            KernelSpec::Linear => {}
            KernelSpec::Polynomial { degree, gamma, coef0 } => p = KernelParams { gamma, degree, coef0 },
            KernelSpec::Sigmoid { gamma, coef0 } => {
                p.gamma = gamma;
                p.coef0 = coef0;
            }
        }
        p
    }

    /// Every key with its effective value; feeding these back through [`set`](Self::set)
    /// reproduces the configuration.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let opt_path = |p: &Option<PathBuf>| p.as_ref().map_or("none".to_string(), |p| p.display().to_string());
        let params = self.effective_params();
        let kernel = match self.kernel {
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Linear => "linear",
            KernelSpec::Polynomial { .. } => "polynomial",
            KernelSpec::Sigmoid { .. } => "sigmoid",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("workers", self.workers.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("images_dir", opt_path(&self.images_dir)),
            ("weights", opt_path(&self.weights)),
            ("random_weights", self.random_weights.map_or("none".into(), |s| s.to_string())),
            ("tap", self.tap.as_str().into()),
            ("augment", self.augment.to_string()),
            ("skip_blank", self.skip_blank.to_string()),
            ("paper_faithful_rows", self.paper_faithful_rows.to_string()),
            ("max_patches_per_class", self.max_patches_per_class.to_string()),
            ("patch_height", self.patches.patch_height.to_string()),
            ("patch_width", self.patches.patch_width.to_string()),
            ("stride", self.patches.stride.to_string()),
            ("positive_overlap_min", self.patches.positive_overlap_min.to_string()),
            ("n_trees", self.ensemble.n_trees.to_string()),
            ("max_features", self.ensemble.max_features.map_or("sqrt".into(), |m| m.to_string())),
            ("min_samples_split", self.ensemble.min_samples_split.to_string()),
            ("max_depth", self.ensemble.max_depth.map_or("none".into(), |d| d.to_string())),
            (
                "splitter",
                match self.ensemble.splitter {
                    Splitter::Random => "extra-trees".into(),
                    Splitter::Best => "random-forest".into(),
                },
            ),
            ("bootstrap", self.ensemble.bootstrap.to_string()),
            ("importance_threshold", self.importance_threshold.to_string()),
            ("kernel", kernel.into()),
            ("gamma", gamma_of(params.gamma)),
            ("degree", params.degree.to_string()),
            ("coef0", params.coef0.to_string()),
            ("families", self.families.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(",")),
            ("c_grid", fmt_list(&self.grid.c_values)),
            ("nu_grid", fmt_list(&self.grid.nu_values)),
            ("kkt_tolerance", self.solver.kkt_tolerance.to_string()),
            ("max_iterations", self.solver.max_iterations.to_string()),
            ("cache_size", self.solver.cache_size.to_string()),
            ("synth_images", self.synth_images.to_string()),
            ("synth_positives", self.synth_positives.to_string()),
            ("synth_size", self.synth_size.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |e: patchsvm::Error| CliError::Config(e.to_string());
        self.patches.validate().map_err(bad)?;
        self.kernel.validate().map_err(bad)?;
        self.grid.validate().map_err(bad)?;
        self.solver.validate().map_err(bad)?;
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.families.is_empty() {
            return Err(CliError::Config("families must name at least one formulation".into()));
        }
        if self.ensemble.n_trees == 0 {
            return Err(CliError::Config("n_trees must be at least 1".into()));
        }
        if !(self.importance_threshold > 0.0 && self.importance_threshold <= 1.0) {
            return Err(CliError::Config(format!("importance_threshold {} outside (0, 1]", self.importance_threshold)));
        }
        if self.synth_positives > self.synth_images {
            return Err(CliError::Config("synth_positives exceeds synth_images".into()));
        }
        Ok(())
    }

    pub fn images_dir(&self) -> PathBuf {
        self.images_dir.clone().unwrap_or_else(|| self.out_dir.join("synth"))
    }
}
