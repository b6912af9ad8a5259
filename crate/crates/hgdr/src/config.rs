//! Flat `key = value` run configuration. `#` starts a comment line, blank
//! lines are ignored, unknown or repeated keys are errors. Relative paths
//! resolve against the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hgdr_core::numeric::AdamConfig;
use hgdr_core::synth::SyntheticSpec;
use hgdr_core::train::{DomainWeights, TrainConfig};
use hgdr_core::{ModelConfig, Variant};

use crate::FormatError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub seed: u64,
    pub mode: Variant,
    pub dim: usize,
    pub layers: usize,
    pub tie_relation_weights: bool,
    pub mean_aggregation: bool,
    pub train: TrainConfig,
    /// Validate on a held-out slice of the training data every this many
    /// epochs and keep the best parameters; 0 disables.
    pub validate_every: usize,
    pub negatives: usize,
    pub cutoff: usize,
    pub synth: SyntheticSpec,
    pub gradcheck: GradcheckSize,
    pub bench: BenchGrid,
}

/// Random graph used by `gradcheck`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckSize {
    pub dim: usize,
    pub users: usize,
    pub items: usize,
    pub domains: usize,
    pub density: f64,
    pub step: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchGrid {
    pub modes: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub datasets: Vec<PathBuf>,
    pub ledger: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            out: None,
            checkpoint: None,
            seed: 0,
            mode: Variant::Full,
            dim: 128,
            layers: 2,
            tie_relation_weights: false,
            mean_aggregation: false,
            train: TrainConfig::default(),
            validate_every: 0,
            negatives: hgdr_core::eval::DEFAULT_NEGATIVES,
            cutoff: hgdr_core::eval::DEFAULT_CUTOFF,
            synth: SyntheticSpec::default(),
            gradcheck: GradcheckSize {
                dim: 3,
                users: 4,
                items: 3,
                domains: 2,
                density: 0.5,
                step: hgdr_core::numeric::DEFAULT_STEP,
                tolerance: 1e-4,
            },
            bench: BenchGrid::default(),
        }
    }
}

/// Key/value pairs with the line each came from.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>, FormatError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let (k, v) = line.split_once('=').ok_or_else(|| FormatError::Line {
            line: lineno,
            msg: "expected key = value".into(),
        })?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(FormatError::Line { line: lineno, msg: "empty key".into() });
        }
        if out.insert(key.clone(), (lineno, v.trim().to_string())).is_some() {
            return Err(FormatError::Line { line: lineno, msg: format!("duplicate key {key}") });
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, FormatError> {
        let mut cfg = Self::default();
        for (key, (line, value)) in parse_pairs(text)? {
            cfg.set(&key, &value, base_dir)
                .map_err(|msg| FormatError::Line { line, msg: format!("{key}: {msg}") })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), String> {
        let path = |v: &str| base.join(v);
        match key {
            "data" => self.data = Some(path(value)),
            "out" => self.out = Some(path(value)),
            "checkpoint" => self.checkpoint = Some(path(value)),
            "seed" => self.set_seed(num(value)?),
            "mode" => self.mode = value.parse().map_err(|e| format!("{e}"))?,
            "dim" => self.dim = num(value)?,
            "layers" => self.layers = num(value)?,
            "tie_relation_weights" => self.tie_relation_weights = flag(value)?,
            "mean_aggregation" => self.mean_aggregation = flag(value)?,
            "epochs" => self.train.epochs = num(value)?,
            "triplets_per_epoch" => {
                self.train.triplets_per_epoch = match value {
                    "auto" => None,
                    v => Some(num(v)?),
                }
            }
            "lr" => self.train.adam.lr = num(value)?,
            "beta1" => self.train.adam.beta1 = num(value)?,
            "beta2" => self.train.adam.beta2 = num(value)?,
            "eps" => self.train.adam.eps = num(value)?,
            "lambda" => self.train.lambda_reg = num(value)?,
            "domain_weights" => {
                self.train.domain_weights = match value {
                    "auto" => DomainWeights::Auto,
                    v => DomainWeights::Fixed(list(v, num)?),
                }
            }
            "reg_per_domain" => self.train.reg_per_domain = flag(value)?,
            "alternate_domains" => self.train.alternate_domains = flag(value)?,
            "message_holdout" => self.train.message_holdout = num(value)?,
            "validate_every" => self.validate_every = num(value)?,
            "negatives" => self.negatives = num(value)?,
            "cutoff" => self.cutoff = num(value)?,
            "synth.users" => self.synth.users = num(value)?,
            "synth.domains" => self.synth.domains = num(value)?,
            "synth.items_per_domain" => self.synth.items_per_domain = num(value)?,
            "synth.latent_dim" => self.synth.latent_dim = num(value)?,
            "synth.shared_signal" => self.synth.shared_signal = num(value)?,
            "synth.interactions_per_user" => self.synth.interactions_per_user = num(value)?,
            "synth.temperature" => self.synth.temperature = num(value)?,
            "gradcheck.dim" => self.gradcheck.dim = num(value)?,
            "gradcheck.users" => self.gradcheck.users = num(value)?,
            "gradcheck.items" => self.gradcheck.items = num(value)?,
            "gradcheck.domains" => self.gradcheck.domains = num(value)?,
            "gradcheck.density" => self.gradcheck.density = num(value)?,
            "gradcheck.step" => self.gradcheck.step = num(value)?,
            "gradcheck.tolerance" => self.gradcheck.tolerance = num(value)?,
            "bench.modes" => {
                self.bench.modes = list(value, |v| v.parse::<Variant>().map_err(|e| format!("{e}")))?
            }
            "bench.seeds" => self.bench.seeds = list(value, num)?,
            "bench.datasets" => self.bench.datasets = list(value, |v| Ok(path(v)))?,
            "bench.ledger" => self.bench.ledger = Some(path(value)),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// One seed drives initialisation, triplet sampling, negative sampling
    /// for evaluation and synthetic generation.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.train.seed = seed;
        self.synth.seed = seed;
    }

    pub fn model_config(&self, num_users: usize, items_per_domain: Vec<usize>) -> ModelConfig {
        ModelConfig {
            dim: self.dim,
            layers: self.layers,
            variant: self.mode,
            tie_relation_weights: self.tie_relation_weights,
            mean_aggregation: self.mean_aggregation,
            ..ModelConfig::new(num_users, items_per_domain)
        }
    }

    pub fn adam(&self) -> AdamConfig {
        self.train.adam
    }
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("cannot parse {v:?}: {e}"))
}

fn flag(v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected a boolean, got {v:?}")),
    }
}

fn list<T>(v: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}
