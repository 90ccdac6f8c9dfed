use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use patchsvm_cli::error::EXIT_CONFIG;
use patchsvm_cli::{stages, CliError, CliResult, PipelineConfig};

#[derive(Parser)]
#[command(name = "patchsvm", version, about = "Patch extraction, CNN features, tree selection and SVM evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// key = value config file (or a run manifest .json to replay its config)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    tap: Option<TapArg>,
    /// Add flipped and rotated copies of every patch
    #[arg(long, global = true)]
    augment: bool,
    /// Drop constant-intensity patches
    #[arg(long, global = true)]
    skip_blank: bool,
    /// Use a seeded random network instead of a weight file
    #[arg(long, global = true, value_name = "SEED")]
    random_weights: Option<u64>,
    /// Assign augmented rows to groups independently
    #[arg(long, global = true)]
    paper_faithful_rows: bool,
    /// Output directory for all stage artifacts
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra config overrides, `key=value`
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TapArg {
    Fc2,
    Flatten,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic image/mask corpus
    Synth,
    /// Cut labeled patches from images and masks
    ExtractPatches,
    /// Push patches through the network and store the tapped features
    ExtractFeatures,
    /// Rank features by tree importance and keep the cumulative-threshold prefix
    SelectFeatures,
    /// Assign rows to the five cross-validation groups
    Split,
    /// Choose C and nu by mean validation AUC
    GridSearch,
    /// Retrain with the chosen parameters and report test AUCs
    Evaluate,
    /// Run every stage from patch extraction to evaluation
    RunPipeline,
}

fn config(cli: &Cli) -> CliResult<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(t) = cli.tap {
        cfg.tap = match t {
            TapArg::Fc2 => patchsvm::cnn::Tap::Fc2,
            TapArg::Flatten => patchsvm::cnn::Tap::Flatten,
        };
    }
    if let Some(s) = cli.random_weights {
        cfg.random_weights = Some(s);
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    cfg.augment |= cli.augment;
    cfg.skip_blank |= cli.skip_blank;
    cfg.paper_faithful_rows |= cli.paper_faithful_rows;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = config(cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    match cli.command {
        Command::Synth => stages::synth(&cfg).map(drop),
        Command::ExtractPatches => stages::extract_patches_stage(&cfg).map(drop),
        Command::ExtractFeatures => stages::extract_features_stage(&cfg).map(drop),
        Command::SelectFeatures => stages::select_features_stage(&cfg).map(drop),
        Command::Split => stages::split_stage(&cfg).map(drop),
        Command::GridSearch => stages::grid_search_stage(&cfg).map(drop),
        Command::Evaluate => stages::evaluate_stage(&cfg).map(drop),
        Command::RunPipeline => stages::run_pipeline(&cfg).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
