//! Pipeline configuration.
//!
//! Sources are layered: built-in defaults, then an optional `key = value`
//! file, then command-line overrides. Keys are the snake_case field names;
//! `#` starts a comment line and an empty value clears an optional field.
//! [`PipelineConfig::to_text`] writes the same format, so a resolved config
//! can be fed back in verbatim.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::annotate::DEFAULT_CONFIDENCE;
use crate::kgstore::DEFAULT_MOLECULE_LIMIT;
use crate::nbest::{CostField, DEFAULT_N_MAX};
use crate::relatedness::{Aggregation, Pairing, ScoringOptions};
use crate::transe::{NormKind, TrainConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("invalid value for {key}: {message}")]
    InvalidValue { key: String, message: String },
    #[error("cannot read config file {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelScope {
    /// One model per utterance over the union of its molecule sets.
    #[default]
    Utterance,
    /// One model over the union of every utterance's molecule sets.
    Global,
}

impl std::fmt::Display for ModelScope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelScope::Utterance => "utterance",
            ModelScope::Global => "global",
        })
    }
}

impl FromStr for ModelScope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "utterance" => Ok(ModelScope::Utterance),
            "global" => Ok(ModelScope::Global),
            _ => Err(format!("unknown model scope {s:?}, expected utterance or global")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub nbest: Option<PathBuf>,
    pub references: Option<PathBuf>,
    pub kg: Option<PathBuf>,
    pub kg_endpoint: Option<String>,
    pub cache_dir: Option<PathBuf>,
    /// Serve remote molecules from the cache only.
    pub offline: bool,
    pub gazetteer: Option<PathBuf>,
    pub annotation_endpoint: Option<String>,
    pub confidence: f64,
    pub molecule_limit: usize,
    pub n_max: usize,
    pub include_literals: bool,
    pub lenient: bool,
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub embed_norm: NormKind,
    pub model_scope: ModelScope,
    /// Pre-trained model; skips training when set.
    pub model: Option<PathBuf>,
    pub aggregation: Aggregation,
    pub pairing: Pairing,
    /// Norm for molecule distances.
    pub norm: NormKind,
    pub cost_field: CostField,
    /// SRC/ASR interpolation weight; `None` ranks on SRC alone.
    pub alpha: Option<f64>,
    pub output_dir: PathBuf,
    /// 0 = all cores.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let scoring = ScoringOptions::pipeline_default();
        Self {
            nbest: None,
            references: None,
            kg: None,
            kg_endpoint: None,
            cache_dir: None,
            offline: false,
            gazetteer: None,
            annotation_endpoint: None,
            confidence: DEFAULT_CONFIDENCE,
            molecule_limit: DEFAULT_MOLECULE_LIMIT,
            n_max: DEFAULT_N_MAX,
            include_literals: false,
            lenient: false,
            dim: train.dim,
            margin: train.margin,
            learning_rate: train.learning_rate,
            epochs: train.epochs,
            batch_size: train.batch_size,
            seed: train.seed,
            embed_norm: train.norm,
            model_scope: ModelScope::Utterance,
            model: None,
            aggregation: scoring.aggregation,
            pairing: scoring.pairing,
            norm: scoring.norm,
            cost_field: CostField::Total,
            alpha: None,
            output_dir: PathBuf::from("out"),
            jobs: 1,
        }
    }
}

pub const KEYS: &[&str] = &[
    "nbest",
    "references",
    "kg",
    "kg_endpoint",
    "cache_dir",
    "offline",
    "gazetteer",
    "annotation_endpoint",
    "confidence",
    "molecule_limit",
    "n_max",
    "include_literals",
    "lenient",
    "dim",
    "margin",
    "learning_rate",
    "epochs",
    "batch_size",
    "seed",
    "embed_norm",
    "model_scope",
    "model",
    "aggregation",
    "pairing",
    "norm",
    "cost_field",
    "alpha",
    "output_dir",
    "jobs",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::InvalidValue { key: key.to_string(), message: e.to_string() })
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn opt_string(value: &str) -> Option<String> {
    (!value.is_empty()).then(|| value.to_string())
}

fn show_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn show_path(v: &Option<PathBuf>) -> String {
    v.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "nbest" => self.nbest = opt_path(value),
            "references" => self.references = opt_path(value),
            "kg" => self.kg = opt_path(value),
            "kg_endpoint" => self.kg_endpoint = opt_string(value),
            "cache_dir" => self.cache_dir = opt_path(value),
            "offline" => self.offline = parse(key, value)?,
            "gazetteer" => self.gazetteer = opt_path(value),
            "annotation_endpoint" => self.annotation_endpoint = opt_string(value),
            "confidence" => self.confidence = parse(key, value)?,
            "molecule_limit" => self.molecule_limit = parse(key, value)?,
            "n_max" => self.n_max = parse(key, value)?,
            "include_literals" => self.include_literals = parse(key, value)?,
            "lenient" => self.lenient = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "margin" => self.margin = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "embed_norm" => self.embed_norm = parse(key, value)?,
            "model_scope" => self.model_scope = parse(key, value)?,
            "model" => self.model = opt_path(value),
            "aggregation" => self.aggregation = parse(key, value)?,
            "pairing" => self.pairing = parse(key, value)?,
            "norm" => self.norm = parse(key, value)?,
            "cost_field" => self.cost_field = parse(key, value)?,
            "alpha" => self.alpha = if value.is_empty() { None } else { Some(parse(key, value)?) },
            "output_dir" => self.output_dir = PathBuf::from(value),
            "jobs" => self.jobs = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "nbest" => show_path(&self.nbest),
            "references" => show_path(&self.references),
            "kg" => show_path(&self.kg),
            "kg_endpoint" => show_opt(&self.kg_endpoint),
            "cache_dir" => show_path(&self.cache_dir),
            "offline" => self.offline.to_string(),
            "gazetteer" => show_path(&self.gazetteer),
            "annotation_endpoint" => show_opt(&self.annotation_endpoint),
            "confidence" => self.confidence.to_string(),
            "molecule_limit" => self.molecule_limit.to_string(),
            "n_max" => self.n_max.to_string(),
            "include_literals" => self.include_literals.to_string(),
            "lenient" => self.lenient.to_string(),
            "dim" => self.dim.to_string(),
            "margin" => self.margin.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "epochs" => self.epochs.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "seed" => self.seed.to_string(),
            "embed_norm" => self.embed_norm.to_string(),
            "model_scope" => self.model_scope.to_string(),
            "model" => show_path(&self.model),
            "aggregation" => self.aggregation.to_string(),
            "pairing" => self.pairing.to_string(),
            "norm" => self.norm.to_string(),
            "cost_field" => self.cost_field.to_string(),
            "alpha" => show_opt(&self.alpha),
            "output_dir" => self.output_dir.display().to_string(),
            "jobs" => self.jobs.to_string(),
            _ => return None,
        })
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: idx + 1 })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        self.apply_text(&text)
    }

    /// Every key, one `key = value` per line, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            margin: self.margin,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            norm: self.embed_norm,
        }
    }

    pub fn scoring(&self) -> ScoringOptions {
        ScoringOptions { aggregation: self.aggregation, pairing: self.pairing, norm: self.norm }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: &str| {
            Err(ConfigError::InvalidValue { key: key.to_string(), message: message.to_string() })
        };
        if !(0.0..=1.0).contains(&self.confidence) {
            return invalid("confidence", "must lie in [0, 1]");
        }
        if self.molecule_limit == 0 {
            return invalid("molecule_limit", "must be at least 1");
        }
        if self.n_max == 0 {
            return invalid("n_max", "must be at least 1");
        }
        if let Some(alpha) = self.alpha {
            if !(0.0..=1.0).contains(&alpha) {
                return invalid("alpha", "must lie in [0, 1]");
            }
        }
        match (&self.kg, &self.kg_endpoint) {
            (Some(_), Some(_)) => return invalid("kg", "set either kg or kg_endpoint, not both"),
            (None, None) => return invalid("kg", "one of kg or kg_endpoint is required"),
            _ => {}
        }
        match (&self.gazetteer, &self.annotation_endpoint) {
            (Some(_), Some(_)) => {
                return invalid("gazetteer", "set either gazetteer or annotation_endpoint, not both")
            }
            (None, None) => return invalid("gazetteer", "one of gazetteer or annotation_endpoint is required"),
            _ => {}
        }
        self.train_config()
            .validate()
            .map_err(|e| ConfigError::InvalidValue { key: "training".into(), message: e.to_string() })
    }
}
