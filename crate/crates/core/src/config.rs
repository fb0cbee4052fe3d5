//! Flat `key = value` experiment configuration.
//!
//! One setting per line; `#` starts a comment. Keys are listed in
//! [`KEYS`]. List values are comma-separated. Command-line overrides go
//! through [`Config::set`] with the same keys.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::consolidation::RegularizerKind;
use crate::detection::{Detector, Propagation, ThresholdRule};
use crate::error::{Error, Result};
use crate::gnn::Activation;
use crate::harness::{AblationAxis, DataSource, ExperimentSpec, ScaleAxis};
use crate::memory::MemoryStrategy;
use crate::synth::SynthConfig;
use crate::trainer::{ModelKind, TrainConfig};

pub const KEYS: &[&str] = &[
    "name",
    "data",
    "out",
    "models",
    "model",
    "split",
    "split_seed",
    "accumulate_test",
    "cohorts",
    "checkpoints",
    "lr",
    "momentum",
    "lr_floor",
    "epochs",
    "batch_size",
    "fanout",
    "hidden",
    "layers",
    "activation",
    "lambda",
    "regularizer",
    "memory_size",
    "replay",
    "memory_strategy",
    "alpha",
    "threshold_ratio",
    "threshold_abs",
    "detector",
    "propagation",
    "online_neighborhood",
    "seed",
    "steps",
    "per_step",
    "feature_dim",
    "classes",
    "structure_shift",
    "attribute_shift",
    "er_degrees",
    "p_in",
    "p_out",
    "mean_before",
    "mean_after",
    "clip",
    "synth_seed",
    "axis",
    "values",
    "scale_axis",
    "sizes",
    "fixed",
    "repeats",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub name: String,
    /// Dataset directory; `None` generates the synthetic stream.
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub models: Vec<ModelKind>,
    pub split: f64,
    pub split_seed: u64,
    pub accumulate_test: bool,
    pub cohorts: Vec<u32>,
    pub checkpoints: bool,
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub axis: AblationAxis,
    /// Empty means the axis defaults.
    pub values: Vec<String>,
    pub scale_axis: ScaleAxis,
    pub sizes: Vec<usize>,
    pub fixed: usize,
    pub repeats: usize,
}

impl Default for Config {
    fn default() -> Self {
        let spec = ExperimentSpec::default();
        Config {
            name: spec.name,
            data: None,
            out: None,
            models: spec.models,
            split: spec.split,
            split_seed: spec.split_seed,
            accumulate_test: spec.accumulate_test,
            cohorts: spec.cohorts,
            checkpoints: spec.checkpoints,
            train: spec.train,
            synth: SynthConfig::default(),
            axis: AblationAxis::MemoryStrategy,
            values: Vec::new(),
            scale_axis: ScaleAxis::NetworkSize,
            sizes: vec![1024, 2048, 4096],
            fixed: 128,
            repeats: 3,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("bad value `{value}` for `{key}`"))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> std::result::Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("bad value `{value}` for `{key}`, expected true or false")),
    }
}

fn named<T: FromStr<Err = Error>>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|e: Error| e.to_string())
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse_str(&text, path)
    }

    /// Parses `text`; `origin` only labels errors.
    pub fn parse_str(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(origin, i + 1, format!("expected `key = value`, got `{line}`")));
            };
            cfg.apply(key.trim(), value.trim())
                .map_err(|msg| Error::parse(origin, i + 1, msg))?;
        }
        Ok(cfg)
    }

    /// Applies one override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.apply(key, value).map_err(Error::Config)
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let t = &mut self.train;
        let s = &mut self.synth;
        match key {
            "name" => self.name = value.to_string(),
            "data" => self.data = (value != "synth").then(|| PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "models" | "model" => {
                self.models = value.split(',').map(|m| named(m.trim())).collect::<std::result::Result<_, _>>()?
            }
            "split" => self.split = parse(key, value)?,
            "split_seed" => self.split_seed = parse(key, value)?,
            "accumulate_test" => self.accumulate_test = parse_bool(key, value)?,
            "cohorts" => self.cohorts = parse_list(key, value)?,
            "checkpoints" => self.checkpoints = parse_bool(key, value)?,
            "lr" => t.lr = parse(key, value)?,
            "momentum" => t.momentum = parse(key, value)?,
            "lr_floor" => t.lr_floor = parse(key, value)?,
            "epochs" => t.epochs = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "fanout" => t.fanout = parse(key, value)?,
            "hidden" => t.hidden = parse(key, value)?,
            "layers" => t.layers = parse(key, value)?,
            "activation" => t.activation = named::<Activation>(value)?,
            "lambda" => t.lambda = parse(key, value)?,
            "regularizer" => t.regularizer = named::<RegularizerKind>(value)?,
            "memory_size" => t.memory_size = parse(key, value)?,
            "replay" => t.replay = parse_bool(key, value)?,
            "memory_strategy" => t.memory_strategy = named::<MemoryStrategy>(value)?,
            "alpha" => t.alpha = parse(key, value)?,
            "threshold_ratio" => t.threshold = ThresholdRule::Ratio(parse(key, value)?),
            "threshold_abs" => t.threshold = ThresholdRule::Absolute(parse(key, value)?),
            "detector" => t.detector = named::<Detector>(value)?,
            "propagation" => {
                t.propagation = match value {
                    "neighbors" => Propagation::NeighborsOnly,
                    "self_inclusive" => Propagation::SelfInclusive,
                    _ => return Err(format!("bad value `{value}` for `{key}`, expected neighbors or self_inclusive")),
                }
            }
            "online_neighborhood" => t.online_neighborhood = parse_bool(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "steps" => s.steps = parse(key, value)?,
            "per_step" => s.per_step = parse(key, value)?,
            "feature_dim" => s.feature_dim = parse(key, value)?,
            "classes" => s.classes = parse(key, value)?,
            "structure_shift" => s.structure_shift = parse(key, value)?,
            "attribute_shift" => s.attribute_shift = parse(key, value)?,
            "er_degrees" => s.er_degrees = parse_list(key, value)?,
            "p_in" => s.p_in = parse(key, value)?,
            "p_out" => s.p_out = parse(key, value)?,
            "mean_before" => s.mean_before = parse(key, value)?,
            "mean_after" => s.mean_after = parse(key, value)?,
            "clip" => s.clip = parse(key, value)?,
            "synth_seed" => s.seed = parse(key, value)?,
            "axis" => self.axis = named::<AblationAxis>(value)?,
            "values" => self.values = parse_list(key, value)?,
            "scale_axis" => self.scale_axis = named::<ScaleAxis>(value)?,
            "sizes" => self.sizes = parse_list(key, value)?,
            "fixed" => self.fixed = parse(key, value)?,
            "repeats" => self.repeats = parse(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn experiment(&self) -> ExperimentSpec {
        ExperimentSpec {
            name: self.name.clone(),
            data: match &self.data {
                Some(dir) => DataSource::Dir(dir.clone()),
                None => DataSource::Synth(self.synth.clone()),
            },
            models: self.models.clone(),
            train: self.train.clone(),
            split: self.split,
            split_seed: self.split_seed,
            accumulate_test: self.accumulate_test,
            cohorts: self.cohorts.clone(),
            out_dir: self.out.clone(),
            checkpoints: self.checkpoints,
        }
    }

    pub fn ablation_values(&self) -> Vec<String> {
        if self.values.is_empty() {
            self.axis.default_values()
        } else {
            self.values.clone()
        }
    }
}
