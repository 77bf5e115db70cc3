use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::bm25::Bm25Params;
use crate::corpus::{ChunkConfig, LangPair};
use crate::eval::{FoldMode, DEFAULT_KS};
use crate::mining::MiningConfig;
use crate::ranking::Pooling;

/// Rankings are cut at this depth before they are written or scored.
pub const RUN_DEPTH: usize = 50;

pub const EMBED_URL_VAR: &str = "EMBED_URL";
pub const TRANSLATE_URL_VAR: &str = "TRANSLATE_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    /// Built-in character n-gram hashing embedder.
    Hashed,
    /// Model behind the HTTP embedding endpoint.
    Http,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedderSpec {
    /// Label used in system names (`dense:<name>`).
    pub name: String,
    pub kind: EmbedderKind,
    /// Required for `hashed`; discovered from the service when omitted for `http`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Falls back to `$EMBED_URL`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<usize>,
}

impl EmbedderSpec {
    pub fn hashed(name: impl Into<String>, dim: usize) -> Self {
        Self {
            name: name.into(),
            kind: EmbedderKind::Hashed,
            dim: Some(dim),
            model: None,
            url: None,
            max_tokens: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranslatorKind {
    Dictionary,
    Http,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslatorSpec {
    pub kind: TranslatorKind,
    /// Supported directions written as `src-dst`, e.g. `hi-en`.
    pub pairs: Vec<LangPair>,
    /// Tab-separated `source<TAB>target` lines, for `dictionary`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<PathBuf>,
    /// Inline dictionary entries, merged over the file.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub entries: BTreeMap<String, String>,
    /// Falls back to `$TRANSLATE_URL`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingConfig {
    /// Embedder behind the cosine scorer; the first configured one if unset.
    pub embedder: Option<String>,
    pub threshold: f64,
    /// Fit the threshold on each training fold.
    pub calibrate: bool,
    pub folds: usize,
    pub fold_mode: FoldMode,
    /// Also evaluate all partitions pooled into one dataset.
    pub pooled: bool,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            embedder: None,
            threshold: 0.5,
            calibrate: true,
            folds: 5,
            fold_mode: FoldMode::Stratified,
            pooled: true,
        }
    }
}

fn default_systems() -> Vec<String> {
    vec!["bm25-full".into(), "bm25-para".into(), "dense".into()]
}

fn default_embedders() -> Vec<EmbedderSpec> {
    vec![EmbedderSpec::hashed("hashed", 384)]
}

/// One experiment, read from a JSON or TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Partitions to run; every partition of the corpus when empty.
    #[serde(default)]
    pub partitions: Vec<LangPair>,
    /// `bm25-full`, `bm25-para`, `dense` (every embedder) or `dense:<name>`.
    #[serde(default = "default_systems")]
    pub systems: Vec<String>,
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub chunking: ChunkConfig,
    #[serde(default)]
    pub pooling: Pooling,
    #[serde(default)]
    pub mining: MiningConfig,
    /// Embedder used for hard-negative mining; the first one if unset.
    #[serde(default)]
    pub mining_embedder: Option<String>,
    #[serde(default)]
    pub matching: MatchingConfig,
    #[serde(default = "default_embedders")]
    pub embedders: Vec<EmbedderSpec>,
    #[serde(default)]
    pub translation: Option<TranslatorSpec>,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub retrieval: bool,
    #[serde(default = "yes")]
    pub matching_experiment: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_ks() -> Vec<usize> {
    DEFAULT_KS.to_vec()
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    /// A config with every default, reading `corpus` and writing to `out_dir`.
    pub fn new(corpus: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            corpus: corpus.into(),
            out_dir: out_dir.into(),
            partitions: Vec::new(),
            systems: default_systems(),
            bm25: Bm25Params::default(),
            chunking: ChunkConfig::default(),
            pooling: Pooling::default(),
            mining: MiningConfig::default(),
            mining_embedder: None,
            matching: MatchingConfig::default(),
            embedders: default_embedders(),
            translation: None,
            ks: default_ks(),
            seed: 0,
            retrieval: true,
            matching_experiment: true,
        }
    }

    /// Parses TOML when the file name ends in `.toml`, JSON otherwise.
    /// Relative paths inside the document resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml(&text)?
        } else {
            Self::from_json(&text)?
        };
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.out_dir);
        if let Some(d) = self.translation.as_mut().and_then(|t| t.dictionary.as_mut()) {
            fix(d);
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.ks.is_empty() || self.ks.contains(&0) {
            return bad("ks must be nonempty and >= 1".into());
        }
        if self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("ks must be strictly ascending, got {:?}", self.ks));
        }
        if *self.ks.last().unwrap() > RUN_DEPTH {
            return bad(format!("largest K exceeds the run depth {RUN_DEPTH}"));
        }
        if self.chunking.token_limit == 0 {
            return bad("chunking.token_limit must be >= 1".into());
        }
        self.bm25.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.mining.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.matching.folds < 2 {
            return bad("matching.folds must be >= 2".into());
        }
        if !(0.0..=1.0).contains(&self.matching.threshold) {
            return bad("matching.threshold must be in [0, 1]".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for e in &self.embedders {
            if !names.insert(e.name.as_str()) {
                return bad(format!("embedder name {:?} repeated", e.name));
            }
            if e.kind == EmbedderKind::Hashed && e.dim.is_none() {
                return bad(format!("hashed embedder {:?} needs dim", e.name));
            }
            if e.kind == EmbedderKind::Http && e.model.is_none() {
                return bad(format!("http embedder {:?} needs model", e.name));
            }
        }
        for name in self.mining_embedder.iter().chain(&self.matching.embedder) {
            if !names.contains(name.as_str()) {
                return bad(format!("unknown embedder {name:?}"));
            }
        }
        for s in &self.systems {
            match s.as_str() {
                "bm25-full" | "bm25-para" => {}
                "dense" if !self.embedders.is_empty() => {}
                other => match other.strip_prefix("dense:") {
                    Some(name) if names.contains(name) => {}
                    _ => return bad(format!("unknown system {other:?}")),
                },
            }
        }
        Ok(())
    }
}
