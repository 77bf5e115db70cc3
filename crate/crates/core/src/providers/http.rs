//! Clients for an out-of-process model service.
//!
//! ```text
//! POST {base}/v1/embed      {"model": str, "texts": [str]}            -> {"dim": int, "vectors": [[float]]}
//! POST {base}/v1/translate  {"src": str, "dst": str, "texts": [str]}  -> {"texts": [str]}
//! ```
//!
//! Non-200 responses carry `{"error": str}`.

use std::collections::BTreeSet;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{check_vectors, EmbeddingProvider, ProviderError, TranslationProvider, Vector};
use crate::corpus::Lang;

const MAX_RESPONSE_BYTES: u64 = 512 * 1024 * 1024;

fn agent(timeout: Duration) -> Agent {
    Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(timeout))
        .build()
        .into()
}

fn endpoint(base: &str, path: &str) -> String {
    format!("{}{}", base.trim_end_matches('/'), path)
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

fn post<Req: Serialize, Resp: DeserializeOwned>(
    agent: &Agent,
    url: &str,
    body: &Req,
) -> Result<Resp, ProviderError> {
    let mut resp = agent
        .post(url)
        .send_json(body)
        .map_err(|e| ProviderError::Transport(format!("{url}: {e}")))?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .with_config()
        .limit(MAX_RESPONSE_BYTES)
        .read_to_string()
        .map_err(|e| ProviderError::Transport(format!("{url}: reading body: {e}")))?;
    if status != 200 {
        let message = serde_json::from_str::<ErrorBody>(&text)
            .map(|b| b.error)
            .unwrap_or(text);
        return Err(ProviderError::Remote { status, message });
    }
    serde_json::from_str(&text).map_err(|e| ProviderError::Protocol(format!("{url}: {e}")))
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f32>>,
}

/// Embedding model served over HTTP. Every response is validated for count,
/// dimension and finiteness before it is returned.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    base_url: String,
    model: String,
    dim: usize,
    max_tokens: usize,
    agent: Agent,
}

impl HttpEmbedder {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>, dim: usize) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            dim,
            max_tokens: 512,
            agent: agent(Duration::from_secs(300)),
        }
    }

    /// Learns the model dimension from a one-text probe request.
    pub fn discover(base_url: impl Into<String>, model: impl Into<String>) -> Result<Self, ProviderError> {
        let mut p = Self::new(base_url, model, 0);
        let resp: EmbedResponse = p.request(&["probe"])?;
        if resp.dim == 0 {
            return Err(ProviderError::Protocol("service reported dim 0".into()));
        }
        p.dim = resp.dim;
        Ok(p)
    }

    pub fn with_max_tokens(mut self, max_tokens: usize) -> Self {
        self.max_tokens = max_tokens.max(1);
        self
    }

    fn request(&self, texts: &[&str]) -> Result<EmbedResponse, ProviderError> {
        post(
            &self.agent,
            &endpoint(&self.base_url, "/v1/embed"),
            &EmbedRequest {
                model: &self.model,
                texts,
            },
        )
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> &str {
        &self.model
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vector>, ProviderError> {
        let resp = self.request(texts)?;
        if resp.dim != self.dim {
            return Err(ProviderError::Protocol(format!(
                "service reported dim {}, expected {}",
                resp.dim, self.dim
            )));
        }
        let vectors: Vec<Vector> = resp.vectors.into_iter().map(Vector::new).collect();
        check_vectors(&vectors, texts.len(), self.dim)?;
        Ok(vectors)
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    src: Lang,
    dst: Lang,
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct TranslateResponse {
    texts: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct HttpTranslator {
    base_url: String,
    pairs: BTreeSet<(Lang, Lang)>,
    agent: Agent,
}

impl HttpTranslator {
    pub fn new(base_url: impl Into<String>, pairs: impl IntoIterator<Item = (Lang, Lang)>) -> Self {
        Self {
            base_url: base_url.into(),
            pairs: pairs.into_iter().collect(),
            agent: agent(Duration::from_secs(300)),
        }
    }
}

impl TranslationProvider for HttpTranslator {
    fn name(&self) -> &str {
        "http-translate"
    }

    fn supports(&self, src: Lang, dst: Lang) -> bool {
        src == dst || self.pairs.contains(&(src, dst))
    }

    fn translate_texts(
        &self,
        texts: &[&str],
        src: Lang,
        dst: Lang,
    ) -> Result<Vec<String>, ProviderError> {
        let resp: TranslateResponse = post(
            &self.agent,
            &endpoint(&self.base_url, "/v1/translate"),
            &TranslateRequest { src, dst, texts },
        )?;
        if resp.texts.len() != texts.len() {
            return Err(ProviderError::Protocol(format!(
                "expected {} translations, got {}",
                texts.len(),
                resp.texts.len()
            )));
        }
        Ok(resp.texts)
    }
}
