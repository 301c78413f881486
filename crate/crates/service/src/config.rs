//! Pipeline configuration, loaded from TOML.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;
use threadscope::analytics::AnalyticsConfig;
use threadscope::corpus::Category;
use threadscope::embed::{self, EmbeddingBackend, PrecomputedIndex};
use threadscope::filter::{LabelModelConfig, TrainConfig, DEFAULT_THRESHOLD};
use threadscope::signals::DEFAULT_SENTIMENT_THRESHOLD;
use threadscope::stance::StanceConfig;
use threadscope::topics::TopicConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Embed(#[from] embed::EmbedError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Category for video records that carry none.
    pub default_category: Category,
    pub malformed_threshold: f64,
    pub exclude_creators: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { default_category: Category::OtherConspiracies, malformed_threshold: 0.01, exclude_creators: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingConfig {
    Hashed { dim: usize, seed: u64 },
    Precomputed { index: PathBuf },
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig::Hashed { dim: embed::DEFAULT_DIM, seed: embed::DEFAULT_SEED }
    }
}

impl EmbeddingConfig {
    pub fn backend(&self) -> Result<EmbeddingBackend, ConfigError> {
        Ok(match self {
            EmbeddingConfig::Hashed { dim, seed } => EmbeddingBackend::hashed(*dim, *seed),
            EmbeddingConfig::Precomputed { index } => {
                EmbeddingBackend::Precomputed(std::sync::Arc::new(PrecomputedIndex::load(index)?))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterStageConfig {
    pub threshold: f64,
    /// Directory with promo/ambiguous/meaningful/self_promo word lists.
    pub lexicon_dir: Option<PathBuf>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub min_texts: usize,
    pub max_iter: usize,
    pub init_accuracy: f64,
    pub init_prior: f64,
    pub learn_prior: bool,
}

impl Default for FilterStageConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let l = LabelModelConfig::default();
        FilterStageConfig {
            threshold: DEFAULT_THRESHOLD,
            lexicon_dir: None,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            l2: t.l2,
            seed: t.seed,
            min_texts: t.min_texts,
            max_iter: l.max_iter,
            init_accuracy: l.init_accuracy,
            init_prior: l.init_prior,
            learn_prior: l.learn_prior,
        }
    }
}

impl FilterStageConfig {
    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            l2: self.l2,
            seed: self.seed,
            min_texts: self.min_texts,
        }
    }

    pub fn label_model(&self) -> LabelModelConfig {
        LabelModelConfig {
            max_iter: self.max_iter,
            init_accuracy: self.init_accuracy,
            init_prior: self.init_prior,
            learn_prior: self.learn_prior,
            ..LabelModelConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TopicStageConfig {
    #[serde(flatten)]
    pub model: TopicConfig,
    /// Extra boilerplate phrases, one per line.
    pub boilerplate_file: Option<PathBuf>,
    /// Extra stopwords, one per line.
    pub stopwords_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalStageConfig {
    pub threshold: f64,
    pub lexicon_dir: Option<PathBuf>,
    /// JSONL of precomputed per-comment scores; replaces the lexicons.
    pub precomputed: Option<PathBuf>,
}

impl Default for SignalStageConfig {
    fn default() -> Self {
        SignalStageConfig { threshold: DEFAULT_SENTIMENT_THRESHOLD, lexicon_dir: None, precomputed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct StanceStageConfig {
    #[serde(flatten)]
    pub weights: StanceConfig,
    pub kb_dir: Option<PathBuf>,
    pub marker_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub ingest: IngestConfig,
    pub embedding: EmbeddingConfig,
    pub filter: FilterStageConfig,
    pub topics: TopicStageConfig,
    pub signals: SignalStageConfig,
    pub stance: StanceStageConfig,
    pub analytics: AnalyticsConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_path_buf(), source: Box::new(e) })
    }

    /// Reads `path`; relative paths inside are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.to_path_buf(), source: e })?;
        let mut cfg = Self::from_toml(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p.as_mut() {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.filter.lexicon_dir);
        fix(&mut self.topics.boilerplate_file);
        fix(&mut self.topics.stopwords_file);
        fix(&mut self.signals.lexicon_dir);
        fix(&mut self.signals.precomputed);
        fix(&mut self.stance.kb_dir);
        fix(&mut self.stance.marker_dir);
        if let EmbeddingConfig::Precomputed { index } = &mut self.embedding {
            if index.is_relative() {
                *index = base.join(&*index);
            }
        }
    }

    /// Checks the values that would otherwise only fail deep inside a stage.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let f = &self.filter;
        if !(0.0..=1.0).contains(&f.threshold) {
            return Err(ConfigError::Invalid(format!("filter.threshold {} outside [0, 1]", f.threshold)));
        }
        if !(f.init_prior > 0.0 && f.init_prior < 1.0) {
            return Err(ConfigError::Invalid(format!("filter.init_prior {} outside (0, 1)", f.init_prior)));
        }
        let w = &self.stance.weights;
        let sum = w.w_similarity + w.w_kb + w.w_rule;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::Invalid(format!("stance weights sum to {sum}, expected 1")));
        }
        if let EmbeddingConfig::Hashed { dim: 0, .. } = self.embedding {
            return Err(ConfigError::Invalid("embedding.dim must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the config and the bytes of
    /// every file it references.
    pub fn fingerprint(&self) -> Result<String, ConfigError> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("config serializes"));
        let mut refs: Vec<&Path> = [
            &self.filter.lexicon_dir,
            &self.topics.boilerplate_file,
            &self.topics.stopwords_file,
            &self.signals.lexicon_dir,
            &self.signals.precomputed,
            &self.stance.kb_dir,
            &self.stance.marker_dir,
        ]
        .into_iter()
        .flatten()
        .map(PathBuf::as_path)
        .collect();
        if let EmbeddingConfig::Precomputed { index } = &self.embedding {
            refs.push(index);
        }
        for p in refs {
            hash_path(&mut h, p)?;
        }
        Ok(hex::encode(h.finalize()))
    }
}

fn hash_path(h: &mut Sha256, p: &Path) -> Result<(), ConfigError> {
    let io = |e| ConfigError::Io { path: p.to_path_buf(), source: e };
    if p.is_dir() {
        let mut entries: Vec<PathBuf> =
            std::fs::read_dir(p).map_err(io)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file()).collect();
        entries.sort();
        for e in entries {
            h.update(e.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
            h.update(std::fs::read(&e).map_err(|err| ConfigError::Io { path: e.clone(), source: err })?);
        }
    } else {
        h.update(std::fs::read(p).map_err(io)?);
    }
    Ok(())
}
