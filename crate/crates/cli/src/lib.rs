//! Command-line driver: synthetic corpora, preprocessing, gender and
//! identification training and evaluation, with config snapshots and
//! machine-readable error records.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use handid::dataset::Side;
use handid::eval::FusionMode;
use handid::nn::Preset;

pub use config::{parse_seeds, DataSource, RunConfig};
pub use output::{error_record, RunLock, ERROR_FILE};

/// A prerequisite file that another command produces.
#[derive(Debug)]
pub struct MissingArtifact {
    pub path: PathBuf,
    pub producer: &'static str,
}

impl MissingArtifact {
    pub fn new(path: &Path, producer: &'static str) -> Self {
        MissingArtifact {
            path: path.to_path_buf(),
            producer,
        }
    }
}

impl fmt::Display for MissingArtifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} is missing or incomplete; run `handid {}` first to produce it",
            self.path.display(),
            self.producer
        )
    }
}

impl std::error::Error for MissingArtifact {}

#[derive(Debug, Parser)]
#[command(name = "handid", version, about = "Hand-image gender recognition and identification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus (PNG images plus HandInfo.csv).
    Synth(CommonArgs),
    /// Cache preprocessed planes for every record.
    Preprocess(CommonArgs),
    /// Train the two-stream network and the feature SVM per seed.
    TrainGender(CommonArgs),
    /// Score trained gender models on their held-out splits.
    EvalGender(CommonArgs),
    /// Train identification SVMs per seed.
    TrainId(CommonArgs),
    /// Score identification SVMs: accuracy, FAR/FRR, EER and ROC.
    EvalId(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Preprocess(_) => "preprocess",
            Command::TrainGender(_) => "train-gender",
            Command::EvalGender(_) => "eval-gender",
            Command::TrainId(_) => "train-id",
            Command::EvalId(_) => "eval-id",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Synth(a)
            | Command::Preprocess(a)
            | Command::TrainGender(a)
            | Command::EvalGender(a)
            | Command::TrainId(a)
            | Command::EvalId(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Run configuration (JSON); flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_preset)]
    pub preset: Option<Preset>,
    #[arg(long, value_parser = parse_side)]
    pub side: Option<Side>,
    /// Subjects per identification split, or subjects to generate for `synth`.
    #[arg(long)]
    pub subjects: Option<usize>,
    /// Comma-separated repeat seeds.
    #[arg(long, value_parser = parse_seed_list)]
    pub seeds: Option<SeedList>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace outputs of a previous run in the output folder.
    #[arg(long)]
    pub overwrite: bool,
    /// Allow identification subject counts other than 80, 100 and 120.
    #[arg(long)]
    pub force: bool,
    /// Image folder containing HandInfo.csv.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Metadata CSV when it is not `<data>/HandInfo.csv`.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    /// Output folder of the command whose artifacts this one consumes.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Preprocessed-plane cache folder.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, value_parser = parse_fusion)]
    pub fusion: Option<FusionMode>,
    #[arg(long)]
    pub train_per_gender: Option<usize>,
    #[arg(long)]
    pub test_per_gender: Option<usize>,
    #[arg(long)]
    pub images_per_subject: Option<usize>,
    #[arg(long)]
    pub gender_signal: Option<f64>,
    #[arg(long)]
    pub subject_signal: Option<f64>,
    #[arg(long)]
    pub image_size: Option<usize>,
    /// Seed of the synthetic generator.
    #[arg(long)]
    pub synth_seed: Option<u64>,
    /// Also write SVG renderings of the error curves.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

fn parse_seed_list(s: &str) -> Result<SeedList, String> {
    parse_seeds(s).map(SeedList).map_err(|e| e.to_string())
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    match s {
        "paper" => Ok(Preset::Paper),
        "desk" => Ok(Preset::Desk),
        other => Err(format!("unknown preset {other:?} (paper or desk)")),
    }
}

fn parse_side(s: &str) -> Result<Side, String> {
    s.parse::<Side>().map_err(|e| e.to_string())
}

fn parse_fusion(s: &str) -> Result<FusionMode, String> {
    s.parse::<FusionMode>().map_err(|e| e.to_string())
}

/// Builds the effective configuration: `--config` (or preset defaults),
/// then explicit flags.
pub fn resolve(command: &str, a: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let mut c = RunConfig::read(path)?;
            if let Some(p) = a.preset {
                if p != c.preset {
                    bail!("--preset {p:?} conflicts with preset {:?} in {}", c.preset, path.display());
                }
            }
            c.command = command.to_string();
            c
        }
        None => RunConfig::defaults(command, a.preset.unwrap_or(Preset::Desk)),
    };
    if let Some(root) = &a.data {
        cfg.data = DataSource::Folder {
            root: root.clone(),
            metadata: a.metadata.clone(),
            columns: Default::default(),
        };
    }
    if let Some(s) = a.side {
        cfg.side = s;
    }
    if let Some(SeedList(s)) = &a.seeds {
        cfg.seeds = s.clone();
    }
    if let Some(o) = &a.out {
        cfg.out = o.clone();
    }
    if a.models.is_some() {
        cfg.models = a.models.clone();
    }
    if a.cache.is_some() {
        cfg.cache = a.cache.clone();
    }
    if let Some(f) = a.fusion {
        cfg.fusion = f;
    }
    if a.force {
        cfg.experiment.id_split.force = true;
    }
    if a.svg {
        cfg.svg = true;
    }
    if let Some(n) = a.train_per_gender {
        cfg.experiment.gender_split.train_per_gender = n;
    }
    if let Some(n) = a.test_per_gender {
        cfg.experiment.gender_split.test_per_gender = n;
    }
    let synth_flags = a.images_per_subject.is_some()
        || a.gender_signal.is_some()
        || a.subject_signal.is_some()
        || a.image_size.is_some()
        || a.synth_seed.is_some();
    if command == "synth" || synth_flags {
        if a.data.is_some() && synth_flags {
            bail!("--data and synthetic generator flags are mutually exclusive");
        }
        let p = cfg.synth_params_mut();
        if command == "synth" {
            if let Some(n) = a.subjects {
                p.n_subjects = n;
            }
        }
        if let Some(v) = a.images_per_subject {
            p.images_per_subject = v;
        }
        if let Some(v) = a.gender_signal {
            p.gender_signal = v;
        }
        if let Some(v) = a.subject_signal {
            p.subject_signal = v;
        }
        if let Some(v) = a.image_size {
            p.image_size = v;
        }
        if let Some(v) = a.synth_seed {
            p.seed = v;
        }
    }
    if command != "synth" {
        if let Some(n) = a.subjects {
            cfg.subjects = n;
        }
    }
    if cfg.seeds.is_empty() {
        bail!("no seeds given");
    }
    Ok(cfg)
}

/// Runs a parsed command line, returning the process exit code. Failures
/// print a JSON error record on stderr and, when possible, write it to the
/// output folder.
pub fn run(cli: Cli) -> i32 {
    let name = cli.command.name();
    let args = cli.command.args().clone();
    let cfg = match resolve(name, &args) {
        Ok(c) => c,
        Err(e) => return output::report_failure(name, None, &e),
    };
    let result = output::with_run_dir(&cfg, args.overwrite, |cfg| match &cli.command {
        Command::Synth(_) => commands::synth(cfg),
        Command::Preprocess(_) => commands::preprocess(cfg),
        Command::TrainGender(_) => commands::train_gender(cfg),
        Command::EvalGender(_) => commands::eval_gender(cfg),
        Command::TrainId(_) => commands::train_id(cfg),
        Command::EvalId(_) => commands::eval_id(cfg),
    });
    match result {
        Ok(()) => 0,
        Err(e) => output::report_failure(name, Some(&cfg.out), &e),
    }
}

/// Configures the rayon pool from `HANDID_THREADS`, when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HANDID_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("HANDID_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
