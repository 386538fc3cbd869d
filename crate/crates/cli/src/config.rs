use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use handid::dataset::{load_metadata, synth_dataset, ColumnMap, Dataset, Side, SynthParams};
use handid::eval::{ExperimentConfig, FusionMode};
use handid::nn::Preset;
use serde::{Deserialize, Serialize};

/// Where records come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DataSource {
    /// A folder of images with a metadata CSV.
    Folder {
        root: PathBuf,
        /// Defaults to `root/HandInfo.csv`.
        metadata: Option<PathBuf>,
        #[serde(default)]
        columns: ColumnMap,
    },
    /// Images generated on the fly.
    Synth { params: SynthParams },
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Folder { root, metadata, columns } => {
                let csv = metadata.clone().unwrap_or_else(|| root.join("HandInfo.csv"));
                if !csv.exists() {
                    bail!(crate::MissingArtifact::new(&csv, "synth"));
                }
                Ok(load_metadata(&csv, root, columns)?)
            }
            DataSource::Synth { params } => Ok(synth_dataset(params, Path::new("synthetic"))?),
        }
    }
}

/// Everything a command needs; written next to its outputs and accepted
/// back through `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub data: DataSource,
    pub preset: Preset,
    pub experiment: ExperimentConfig,
    pub side: Side,
    /// Subjects per identification split.
    pub subjects: usize,
    pub fusion: FusionMode,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// Output folder of the producing command, when this one consumes
    /// trained artifacts.
    pub models: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    /// Also render SVG curves.
    pub svg: bool,
}

impl RunConfig {
    pub fn defaults(command: &str, preset: Preset) -> Self {
        RunConfig {
            command: command.to_string(),
            data: DataSource::Synth {
                params: SynthParams::default(),
            },
            preset,
            experiment: ExperimentConfig::for_preset(preset),
            side: Side::Dorsal,
            subjects: 80,
            fusion: FusionMode::Ensemble,
            seeds: (0..10).collect(),
            out: PathBuf::from("out"),
            models: None,
            cache: None,
            svg: false,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn synth_params_mut(&mut self) -> &mut SynthParams {
        if !matches!(self.data, DataSource::Synth { .. }) {
            self.data = DataSource::Synth {
                params: SynthParams::default(),
            };
        }
        match &mut self.data {
            DataSource::Synth { params } => params,
            DataSource::Folder { .. } => unreachable!(),
        }
    }
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let seeds = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().with_context(|| format!("bad seed {p:?}")))
        .collect::<Result<Vec<_>>>()?;
    if seeds.is_empty() {
        bail!("no seeds given");
    }
    Ok(seeds)
}
