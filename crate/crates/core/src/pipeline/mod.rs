//! End-to-end experiments: retrieval runs per partition and system, and
//! cross-validated matching over mined datasets.
//!
//! Output layout under `out_dir`:
//!
//! ```text
//! runs/<partition>/<system>.run       TREC run, top 50 per query
//! queries/<partition>/<system>.jsonl  query text as sent to the system
//! qrels/<partition>.qrels
//! retrieval_report.{json,txt}
//! datasets/<partition>.jsonl          positives + mined negatives
//! match_report.{json,txt}
//! ```

mod config;
mod matching;
mod retrieval;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use thiserror::Error;

use crate::bm25::Bm25Error;
use crate::corpus::{ingest_corpus, Corpus, CorpusError, LangPair};
use crate::dense::DenseError;
use crate::eval::{EvalError, MatchReport, RetrievalReport};
use crate::mining::MiningError;
use crate::providers::{
    DictionaryTranslator, EmbeddingProvider, HashedEmbedder, HttpEmbedder, HttpTranslator,
    ProviderError, TranslationProvider,
};

pub use config::{
    EmbedderKind, EmbedderSpec, ExperimentConfig, MatchingConfig, TranslatorKind, TranslatorSpec,
    EMBED_URL_VAR, RUN_DEPTH, TRANSLATE_URL_VAR,
};
pub use matching::{build_datasets, default_scorer, run_matching_experiment};
pub use retrieval::{run_retrieval_experiment, System};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Bm25(#[from] Bm25Error),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no retrieval systems configured")]
    NoSystems,
    #[error("partition {0} has no pairs in the corpus")]
    EmptyPartition(LangPair),
    #[error("partition {0} is cross-lingual and BM25 needs a translation provider")]
    MissingTranslator(LangPair),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// True when the failure came from an embedding or translation provider.
    pub fn is_provider_failure(&self) -> bool {
        fn dense(e: &DenseError) -> bool {
            matches!(e, DenseError::Provider { .. })
        }
        match self {
            Self::Provider(_) => true,
            Self::Dense(e) => dense(e),
            Self::Mining(MiningError::Dense(e)) => dense(e),
            Self::Eval(EvalError::Provider(_)) => true,
            Self::Eval(EvalError::Dense(e)) => dense(e),
            _ => false,
        }
    }
}

/// Embedding and translation providers resolved for one experiment.
#[derive(Clone, Default)]
pub struct Providers {
    embedders: Vec<(String, Arc<dyn EmbeddingProvider>)>,
    translator: Option<Arc<dyn TranslationProvider>>,
}

impl Providers {
    pub fn new(
        embedders: Vec<(String, Arc<dyn EmbeddingProvider>)>,
        translator: Option<Arc<dyn TranslationProvider>>,
    ) -> Self {
        Self {
            embedders,
            translator,
        }
    }

    /// Instantiates every provider named in `cfg`. HTTP endpoints default to
    /// `$EMBED_URL` and `$TRANSLATE_URL`.
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self, PipelineError> {
        let mut embedders: Vec<(String, Arc<dyn EmbeddingProvider>)> = Vec::new();
        for spec in &cfg.embedders {
            embedders.push((spec.name.clone(), build_embedder(spec)?));
        }
        let translator = cfg.translation.as_ref().map(build_translator).transpose()?;
        Ok(Self {
            embedders,
            translator,
        })
    }

    /// The named embedder, or the first one when `name` is `None`.
    pub fn embedder(&self, name: Option<&str>) -> Option<&Arc<dyn EmbeddingProvider>> {
        match name {
            Some(n) => self.embedders.iter().find(|(k, _)| k == n).map(|(_, p)| p),
            None => self.embedders.first().map(|(_, p)| p),
        }
    }

    pub fn embedder_names(&self) -> impl Iterator<Item = &str> {
        self.embedders.iter().map(|(k, _)| k.as_str())
    }

    pub fn translator(&self) -> Option<&Arc<dyn TranslationProvider>> {
        self.translator.as_ref()
    }
}

fn endpoint(explicit: &Option<String>, var: &str) -> Result<String, PipelineError> {
    explicit
        .clone()
        .or_else(|| std::env::var(var).ok().filter(|v| !v.is_empty()))
        .ok_or_else(|| PipelineError::Config(format!("no endpoint configured and ${var} is unset")))
}

pub fn build_embedder(spec: &EmbedderSpec) -> Result<Arc<dyn EmbeddingProvider>, PipelineError> {
    let max_tokens = spec.max_tokens.unwrap_or(512);
    Ok(match spec.kind {
        EmbedderKind::Hashed => {
            let dim = spec
                .dim
                .ok_or_else(|| PipelineError::Config(format!("hashed embedder {:?} needs dim", spec.name)))?;
            Arc::new(HashedEmbedder::new(dim)?.with_max_tokens(max_tokens))
        }
        EmbedderKind::Http => {
            let url = endpoint(&spec.url, EMBED_URL_VAR)?;
            let model = spec
                .model
                .clone()
                .ok_or_else(|| PipelineError::Config(format!("http embedder {:?} needs model", spec.name)))?;
            let p = match spec.dim {
                Some(dim) => HttpEmbedder::new(url, model, dim),
                None => HttpEmbedder::discover(url, model)?,
            };
            Arc::new(p.with_max_tokens(max_tokens))
        }
    })
}

/// Reads `source<TAB>target` lines; blank lines and `#` comments are skipped.
pub fn read_dictionary(path: &Path) -> Result<BTreeMap<String, String>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let mut table = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (src, dst) = line.split_once('\t').ok_or_else(|| {
            PipelineError::Config(format!("{}:{}: expected source<TAB>target", path.display(), i + 1))
        })?;
        table.insert(src.trim().to_string(), dst.trim().to_string());
    }
    Ok(table)
}

pub fn build_translator(spec: &TranslatorSpec) -> Result<Arc<dyn TranslationProvider>, PipelineError> {
    let pairs = spec.pairs.iter().map(|lp| (lp.tweet, lp.article));
    Ok(match spec.kind {
        TranslatorKind::Dictionary => {
            let mut table = match &spec.dictionary {
                Some(p) => read_dictionary(p)?,
                None => BTreeMap::new(),
            };
            table.extend(spec.entries.clone());
            Arc::new(DictionaryTranslator::new(pairs, table))
        }
        TranslatorKind::Http => Arc::new(HttpTranslator::new(endpoint(&spec.url, TRANSLATE_URL_VAR)?, pairs)),
    })
}

pub fn load_corpus(path: &Path) -> Result<Corpus, PipelineError> {
    let f = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(ingest_corpus(BufReader::new(f))?)
}

/// Partitions named in `cfg`, or all of the corpus's. Each must have pairs.
pub(crate) fn selected_partitions(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
) -> Result<Vec<LangPair>, PipelineError> {
    let parts: Vec<LangPair> = if cfg.partitions.is_empty() {
        corpus.partitions().collect()
    } else {
        cfg.partitions.clone()
    };
    if let Some(&lp) = parts.iter().find(|&&lp| corpus.partition_pairs(lp).next().is_none()) {
        return Err(PipelineError::EmptyPartition(lp));
    }
    Ok(parts)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutcome {
    pub retrieval: Option<RetrievalReport>,
    pub matching: Option<MatchReport>,
}

/// Loads the corpus and providers named by `cfg` and runs the enabled
/// experiments.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, PipelineError> {
    cfg.validate()?;
    let corpus = load_corpus(&cfg.corpus)?;
    info!(
        "corpus: {} tweets, {} articles, {} pairs",
        corpus.tweets().len(),
        corpus.articles().len(),
        corpus.pairs().len()
    );
    let providers = Providers::from_config(cfg)?;
    let mut out = ExperimentOutcome::default();
    if cfg.retrieval {
        out.retrieval = Some(run_retrieval_experiment(cfg, &corpus, &providers)?);
    }
    if cfg.matching_experiment {
        let mut scorer = default_scorer(cfg, &providers)?;
        out.matching = Some(run_matching_experiment(cfg, &corpus, &providers, &mut scorer)?);
    }
    Ok(out)
}
