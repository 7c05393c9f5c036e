//! Flat key-value run configuration with command-line overrides.
//!
//! A config file holds `key = value` lines; `#` starts a comment. Unknown
//! keys are rejected so typos cannot silently fall back to defaults. The
//! effective configuration (after overrides) is hashed into every output
//! header for provenance.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

use copair_core::eval::ScoreForm;
use copair_core::losses::{Distance, LossConfig, LossKind};
use copair_core::trainer::{SyntheticSpec, TrainConfig};

/// Evaluation input interpretation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Embedding dumps scored by detection-score times cosine.
    Sscod,
    /// Class-probability dumps paired by argmax agreement.
    HardMatch,
    /// Class-probability dumps scored by probability-vector cosine.
    SoftMatch,
}

impl EvalMode {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sscod" => Ok(EvalMode::Sscod),
            "hard_match" => Ok(EvalMode::HardMatch),
            "soft_match" => Ok(EvalMode::SoftMatch),
            other => bail!("unknown mode {other:?} (expected sscod | hard_match | soft_match)"),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EvalMode::Sscod => "sscod",
            EvalMode::HardMatch => "hard_match",
            EvalMode::SoftMatch => "soft_match",
        }
    }
}

/// Pair-sampling algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleAlgorithm {
    /// Offline list of all images pairs sharing a class.
    PairList,
    /// Dump of the per-class image-id dictionary.
    ClassIndex,
    /// Base-class batch sampler.
    Batch,
}

impl SampleAlgorithm {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "pair-list" => Ok(SampleAlgorithm::PairList),
            "class-index" => Ok(SampleAlgorithm::ClassIndex),
            "batch" => Ok(SampleAlgorithm::Batch),
            other => bail!("unknown algorithm {other:?} (expected pair-list | class-index | batch)"),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SampleAlgorithm::PairList => "pair-list",
            SampleAlgorithm::ClassIndex => "class-index",
            SampleAlgorithm::Batch => "batch",
        }
    }
}

/// The full run configuration. Every key has a default; a config file and
/// then command-line flags override it.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub loss: LossKind,
    /// Absent means the loss kind's own default (4 class-wise, 1 pair-wise).
    pub scale: Option<f64>,
    pub margin: f64,
    pub ema_decay: f64,
    pub triplet_distance: Distance,
    pub steps: usize,
    pub learning_rate: f64,
    pub log_every: usize,
    pub weight_seed: u64,
    pub n_classes: usize,
    pub points_per_class: usize,
    pub dim: usize,
    pub cluster_spread: f64,
    pub top_k: usize,
    pub iou_thresholds: Vec<f64>,
    pub similarity_threshold: f64,
    pub score_form: ScoreForm,
    pub mode: EvalMode,
    pub gt_pairs: usize,
    pub batch_size: usize,
    pub algorithm: SampleAlgorithm,
    pub base_class: Option<usize>,
    pub grad_tol: f64,
    pub grad_instances: usize,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            loss: LossKind::Curcon,
            scale: None,
            margin: 0.5,
            ema_decay: 0.99,
            triplet_distance: Distance::Cosine,
            steps: 500,
            learning_rate: 0.1,
            log_every: 10,
            weight_seed: 0,
            n_classes: 3,
            points_per_class: 20,
            dim: 8,
            cluster_spread: 0.3,
            top_k: 100,
            iou_thresholds: vec![0.5, 0.6, 0.7],
            similarity_threshold: f64::NEG_INFINITY,
            score_form: ScoreForm::Eq2,
            mode: EvalMode::Sscod,
            gt_pairs: 6,
            batch_size: 16,
            algorithm: SampleAlgorithm::PairList,
            base_class: None,
            grad_tol: 1e-5,
            grad_instances: 20,
            jobs: 1,
        }
    }
}

fn parse_score_form(value: &str) -> Result<ScoreForm> {
    match value {
        "eq2" => Ok(ScoreForm::Eq2),
        "combined_sqrt" => Ok(ScoreForm::CombinedSqrt),
        other => bail!("unknown score_form {other:?} (expected eq2 | combined_sqrt)"),
    }
}

fn parse_distance(value: &str) -> Result<Distance> {
    match value {
        "cosine" => Ok(Distance::Cosine),
        "euclidean" => Ok(Distance::Euclidean),
        other => bail!("unknown triplet_distance {other:?} (expected cosine | euclidean)"),
    }
}

impl RunConfig {
    /// Parses a config file on top of the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = RunConfig::default();
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), idx + 1))?;
            cfg.set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), idx + 1))?;
        }
        Ok(cfg)
    }

    /// Applies one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = value.parse()?,
            "loss" => {
                self.loss = LossKind::parse(value)
                    .ok_or_else(|| anyhow!("unknown loss {value:?}"))?;
            }
            "scale" => self.scale = Some(value.parse()?),
            "margin" => self.margin = value.parse()?,
            "ema_decay" => self.ema_decay = value.parse()?,
            "triplet_distance" => self.triplet_distance = parse_distance(value)?,
            "steps" => self.steps = value.parse()?,
            "learning_rate" => self.learning_rate = value.parse()?,
            "log_every" => self.log_every = value.parse()?,
            "weight_seed" => self.weight_seed = value.parse()?,
            "n_classes" => self.n_classes = value.parse()?,
            "points_per_class" => self.points_per_class = value.parse()?,
            "dim" => self.dim = value.parse()?,
            "cluster_spread" => self.cluster_spread = value.parse()?,
            "top_k" => self.top_k = value.parse()?,
            "iou_thresholds" => {
                self.iou_thresholds = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(Into::into))
                    .collect::<Result<Vec<f64>>>()?;
            }
            "similarity_threshold" => self.similarity_threshold = value.parse()?,
            "score_form" => self.score_form = parse_score_form(value)?,
            "mode" => self.mode = EvalMode::parse(value)?,
            "gt_pairs" => self.gt_pairs = value.parse()?,
            "batch_size" => self.batch_size = value.parse()?,
            "algorithm" => self.algorithm = SampleAlgorithm::parse(value)?,
            "base_class" => self.base_class = Some(value.parse()?),
            "grad_tol" => self.grad_tol = value.parse()?,
            "grad_instances" => self.grad_instances = value.parse()?,
            "jobs" => self.jobs = value.parse()?,
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    /// Loss parameters implied by this configuration.
    pub fn loss_config(&self) -> LossConfig {
        let mut cfg = LossConfig::new(self.loss);
        if let Some(scale) = self.scale {
            cfg.scale = scale;
        }
        cfg.margin = self.margin;
        cfg.ema_decay = self.ema_decay;
        cfg.triplet_distance = self.triplet_distance;
        cfg
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            n_classes: self.n_classes,
            points_per_class: self.points_per_class,
            dim: self.dim,
            cluster_spread: self.cluster_spread,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            loss: self.loss_config(),
            steps: self.steps,
            learning_rate: self.learning_rate,
            log_every: self.log_every,
            weight_seed: self.weight_seed,
        }
    }

    /// Canonical serialization of the effective configuration: sorted
    /// `key=value` lines. This is what gets hashed into output headers.
    pub fn canonical(&self) -> String {
        let mut entries: BTreeMap<&str, String> = BTreeMap::new();
        entries.insert("seed", self.seed.to_string());
        entries.insert("loss", self.loss.name().to_string());
        entries.insert(
            "scale",
            self.scale.unwrap_or_else(|| self.loss.default_scale()).to_string(),
        );
        entries.insert("margin", self.margin.to_string());
        entries.insert("ema_decay", self.ema_decay.to_string());
        entries.insert(
            "triplet_distance",
            match self.triplet_distance {
                Distance::Cosine => "cosine".to_string(),
                Distance::Euclidean => "euclidean".to_string(),
            },
        );
        entries.insert("steps", self.steps.to_string());
        entries.insert("learning_rate", self.learning_rate.to_string());
        entries.insert("log_every", self.log_every.to_string());
        entries.insert("weight_seed", self.weight_seed.to_string());
        entries.insert("n_classes", self.n_classes.to_string());
        entries.insert("points_per_class", self.points_per_class.to_string());
        entries.insert("dim", self.dim.to_string());
        entries.insert("cluster_spread", self.cluster_spread.to_string());
        entries.insert("top_k", self.top_k.to_string());
        entries.insert(
            "iou_thresholds",
            self.iou_thresholds
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        entries.insert("similarity_threshold", self.similarity_threshold.to_string());
        entries.insert(
            "score_form",
            match self.score_form {
                ScoreForm::Eq2 => "eq2".to_string(),
                ScoreForm::CombinedSqrt => "combined_sqrt".to_string(),
            },
        );
        entries.insert("mode", self.mode.name().to_string());
        entries.insert("gt_pairs", self.gt_pairs.to_string());
        entries.insert("batch_size", self.batch_size.to_string());
        entries.insert("algorithm", self.algorithm.name().to_string());
        if let Some(base) = self.base_class {
            entries.insert("base_class", base.to_string());
        }
        entries.insert("grad_tol", self.grad_tol.to_string());
        entries.insert("grad_instances", self.grad_instances.to_string());
        entries.insert("jobs", self.jobs.to_string());

        let mut out = String::new();
        for (k, v) in entries {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical configuration.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Provenance header for output files.
    pub fn header(&self) -> String {
        format!("# copair {} config={}", env!("CARGO_PKG_VERSION"), self.hash())
    }
}
