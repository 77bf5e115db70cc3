//! Embedding and translation providers.
//!
//! Neural models and machine translation are reached through two traits so
//! the retrieval code never depends on a particular model. Built-in
//! implementations are deterministic and offline ([`HashedEmbedder`],
//! [`DictionaryTranslator`]); [`HttpEmbedder`] and [`HttpTranslator`] speak
//! the JSON wire protocol of an external model service.

mod dictionary;
mod hashed;
mod http;

use log::warn;
use thiserror::Error;

use crate::corpus::Lang;
use crate::textproc::truncate_tokens;

pub use dictionary::DictionaryTranslator;
pub use hashed::{fnv1a64, HashedEmbedder};
pub use http::{HttpEmbedder, HttpTranslator};

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("embedding batch is empty")]
    EmptyBatch,
    #[error("invalid provider configuration: {0}")]
    InvalidConfig(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("provider returned status {status}: {message}")]
    Remote { status: u16, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("vector {index} has dimension {actual}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("vector {index} has a non-finite component")]
    NonFinite { index: usize },
    #[error("translation {src}->{dst} is not supported by {provider}")]
    UnsupportedPair {
        provider: String,
        src: Lang,
        dst: Lang,
    },
}

/// A dense embedding. Components are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f32>);

impl Vector {
    pub fn new(components: Vec<f32>) -> Self {
        Self(components)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
    }

    /// Unit-length copy; zero vectors stay zero.
    pub fn normalized(&self) -> Vector {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Vector(self.0.iter().map(|&x| (x as f64 / n) as f32).collect())
    }
}

impl From<Vec<f32>> for Vector {
    fn from(v: Vec<f32>) -> Self {
        Self(v)
    }
}

/// Maps texts to fixed-dimension vectors.
///
/// Implementations must return exactly one vector of length [`dim`](Self::dim)
/// per input, in input order, and be deterministic for a fixed version.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    /// Longest input, in tokens, the model accepts.
    fn max_tokens(&self) -> usize {
        512
    }
    /// Raw call; prefer [`embed_batch`], which validates the output.
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vector>, ProviderError>;
}

/// Embeds `texts` through `provider`, truncating over-long inputs to the
/// provider's token limit and checking count, dimension and finiteness of
/// every returned vector.
pub fn embed_batch<S: AsRef<str>>(
    provider: &dyn EmbeddingProvider,
    texts: &[S],
) -> Result<Vec<Vector>, ProviderError> {
    if texts.is_empty() {
        return Err(ProviderError::EmptyBatch);
    }
    let limit = provider.max_tokens();
    let inputs: Vec<&str> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let t = t.as_ref();
            let cut = truncate_tokens(t, limit);
            if cut.len() < t.len() {
                warn!("{}: input {i} exceeds {limit} tokens, truncated", provider.name());
            }
            cut
        })
        .collect();
    let vectors = provider.embed(&inputs)?;
    check_vectors(&vectors, inputs.len(), provider.dim())?;
    Ok(vectors)
}

pub(crate) fn check_vectors(
    vectors: &[Vector],
    expected_count: usize,
    dim: usize,
) -> Result<(), ProviderError> {
    if vectors.len() != expected_count {
        return Err(ProviderError::Protocol(format!(
            "expected {expected_count} vectors, got {}",
            vectors.len()
        )));
    }
    for (index, v) in vectors.iter().enumerate() {
        if v.dim() != dim {
            return Err(ProviderError::DimensionMismatch {
                index,
                expected: dim,
                actual: v.dim(),
            });
        }
        if !v.is_finite() {
            return Err(ProviderError::NonFinite { index });
        }
    }
    Ok(())
}

/// Machine translation between corpus languages.
pub trait TranslationProvider: Send + Sync {
    fn name(&self) -> &str;
    fn supports(&self, src: Lang, dst: Lang) -> bool;
    fn translate_texts(
        &self,
        texts: &[&str],
        src: Lang,
        dst: Lang,
    ) -> Result<Vec<String>, ProviderError>;
}

/// Translates a batch. Same-language requests are returned unchanged without
/// calling the provider.
pub fn translate_batch(
    provider: &dyn TranslationProvider,
    texts: &[&str],
    src: Lang,
    dst: Lang,
) -> Result<Vec<String>, ProviderError> {
    if src == dst {
        return Ok(texts.iter().map(|t| t.to_string()).collect());
    }
    if !provider.supports(src, dst) {
        return Err(ProviderError::UnsupportedPair {
            provider: provider.name().to_string(),
            src,
            dst,
        });
    }
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let out = provider.translate_texts(texts, src, dst)?;
    if out.len() != texts.len() {
        return Err(ProviderError::Protocol(format!(
            "expected {} translations, got {}",
            texts.len(),
            out.len()
        )));
    }
    Ok(out)
}

pub fn translate(
    provider: &dyn TranslationProvider,
    text: &str,
    src: Lang,
    dst: Lang,
) -> Result<String, ProviderError> {
    Ok(translate_batch(provider, &[text], src, dst)?.remove(0))
}
