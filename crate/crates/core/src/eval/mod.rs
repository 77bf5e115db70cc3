//! Retrieval and classification evaluation.
//!
//! Retrieval runs are scored with MAP@K and MRR against [`Qrels`]; matchers
//! ([`PairScorer`]) are scored with accuracy and per-class F1 under k-fold
//! cross validation.

mod kfold;
mod matching;
mod metrics;
pub mod trec;

use thiserror::Error;

use crate::dense::DenseError;
use crate::providers::ProviderError;

pub use kfold::{kfold_split, Fold, FoldMode};
pub use matching::{
    evaluate_matcher, ClassMetrics, Confusion, CosineScorer, FoldResult, MatchReport, MatchResult,
    PairScorer,
};
pub use metrics::{
    average_precision_at_k, evaluate_retrieval, reciprocal_rank, Qrels, RetrievalReport,
    RetrievalScores, SystemResult, DEFAULT_KS,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("run contains query {0} which has no relevance judgments")]
    UnknownQuery(String),
    #[error("cutoffs must be >= 1")]
    InvalidK,
    #[error("query {0} has an empty relevance set")]
    EmptyRelevance(String),
    #[error("cannot split {size} records into {k} folds")]
    TooSmall { size: usize, k: usize },
    #[error("dataset contains a single label; stratified folds need both")]
    SingleLabel,
    #[error("pair ({0}, {1}) references an unknown tweet or article")]
    UnknownPair(String, String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
