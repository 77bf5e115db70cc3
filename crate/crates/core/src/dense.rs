//! Exact embedding search over paragraph chunks.
//!
//! Rows are L2-normalized at build time, so a query is scored against every
//! chunk with one dot product. Chunk scores collapse onto articles with the
//! configured [`Pooling`] (maximum by default).

use std::io::{Read, Write};

use thiserror::Error;

use crate::corpus::ParagraphChunk;
use crate::providers::{embed_batch, EmbeddingProvider, ProviderError, Vector};
use crate::ranking::{pool_by_article, Pooling, RankedList};

pub const STORE_MAGIC: &[u8; 8] = b"CMVSTORE";
pub const STORE_VERSION: u32 = 1;
pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("vector dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("nothing to embed")]
    Empty,
    #[error("embedding batch {batch} failed: {source}")]
    Provider {
        batch: usize,
        #[source]
        source: ProviderError,
    },
    #[error("store was built with {store_provider} (dim {store_dim}), query provider is {provider} (dim {dim})")]
    ProviderMismatch {
        store_provider: String,
        store_dim: usize,
        provider: String,
        dim: usize,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("vector store file: {0}")]
    Format(String),
}

fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| a as f64 * b as f64).sum()
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64, DenseError> {
    if u.len() != v.len() {
        return Err(DenseError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok(dot(u, v) / (nu * nv))
}

/// Embeds `texts` in batches, tagging failures with the batch number.
fn embed_all<S: AsRef<str>>(
    provider: &dyn EmbeddingProvider,
    texts: &[S],
    batch_size: usize,
) -> Result<Vec<Vector>, DenseError> {
    let mut out = Vec::with_capacity(texts.len());
    for (batch, chunk) in texts.chunks(batch_size.max(1)).enumerate() {
        let vs = embed_batch(provider, chunk).map_err(|source| DenseError::Provider { batch, source })?;
        out.extend(vs);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    provider_name: String,
    dim: usize,
    chunk_ids: Vec<String>,
    chunk_articles: Vec<String>,
    /// Row-major, `chunk_ids.len() × dim`, unit or zero rows.
    rows: Vec<f32>,
}

impl VectorStore {
    pub fn build(
        provider: &dyn EmbeddingProvider,
        chunks: &[ParagraphChunk],
    ) -> Result<Self, DenseError> {
        Self::build_batched(provider, chunks, DEFAULT_BATCH_SIZE)
    }

    pub fn build_batched(
        provider: &dyn EmbeddingProvider,
        chunks: &[ParagraphChunk],
        batch_size: usize,
    ) -> Result<Self, DenseError> {
        if chunks.is_empty() {
            return Err(DenseError::Empty);
        }
        let dim = provider.dim();
        let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
        let vectors = embed_all(provider, &texts, batch_size)?;
        let mut rows = Vec::with_capacity(chunks.len() * dim);
        for v in &vectors {
            if v.dim() != dim {
                return Err(DenseError::DimensionMismatch {
                    left: dim,
                    right: v.dim(),
                });
            }
            rows.extend_from_slice(v.normalized().as_slice());
        }
        Ok(Self {
            provider_name: provider.name().to_string(),
            dim,
            chunk_ids: chunks.iter().map(ParagraphChunk::chunk_id).collect(),
            chunk_articles: chunks.iter().map(|c| c.article_id.clone()).collect(),
            rows,
        })
    }

    pub fn provider_name(&self) -> &str {
        &self.provider_name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.chunk_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunk_ids.is_empty()
    }

    pub fn chunk_ids(&self) -> &[String] {
        &self.chunk_ids
    }

    pub fn article_of(&self, row: usize) -> &str {
        &self.chunk_articles[row]
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    fn check_provider(&self, provider: &dyn EmbeddingProvider) -> Result<(), DenseError> {
        if provider.name() != self.provider_name || provider.dim() != self.dim {
            return Err(DenseError::ProviderMismatch {
                store_provider: self.provider_name.clone(),
                store_dim: self.dim,
                provider: provider.name().to_string(),
                dim: provider.dim(),
            });
        }
        Ok(())
    }

    /// Cosine of `query` against every row.
    pub fn chunk_scores(&self, query: &Vector) -> Result<Vec<f64>, DenseError> {
        if query.dim() != self.dim {
            return Err(DenseError::DimensionMismatch {
                left: self.dim,
                right: query.dim(),
            });
        }
        let q = query.normalized();
        Ok((0..self.len()).map(|i| dot(self.row(i), q.as_slice())).collect())
    }

    pub fn search_vector(
        &self,
        query_id: &str,
        query: &Vector,
        k: usize,
        pooling: Pooling,
    ) -> Result<RankedList, DenseError> {
        let scores = self.chunk_scores(query)?;
        let pooled = pool_by_article(
            scores
                .iter()
                .enumerate()
                .map(|(i, &s)| (self.chunk_articles[i].as_str(), s)),
            pooling,
        );
        Ok(RankedList::from_scores(
            query_id,
            pooled.into_iter().map(|(a, s)| (a.to_string(), s)),
            k,
        ))
    }

    /// Embeds `query_text` and returns the top-`k` articles.
    pub fn search(
        &self,
        provider: &dyn EmbeddingProvider,
        query_id: &str,
        query_text: &str,
        k: usize,
        pooling: Pooling,
    ) -> Result<RankedList, DenseError> {
        self.check_provider(provider)?;
        let q = embed_batch(provider, &[query_text])
            .map_err(|source| DenseError::Provider { batch: 0, source })?
            .remove(0);
        self.search_vector(query_id, &q, k, pooling)
    }

    /// Batched form of [`search`](Self::search); results follow input order.
    pub fn search_many(
        &self,
        provider: &dyn EmbeddingProvider,
        queries: &[(String, String)],
        k: usize,
        pooling: Pooling,
    ) -> Result<Vec<RankedList>, DenseError> {
        self.check_provider(provider)?;
        if queries.is_empty() {
            return Ok(Vec::new());
        }
        let texts: Vec<&str> = queries.iter().map(|(_, t)| t.as_str()).collect();
        let vectors = embed_all(provider, &texts, DEFAULT_BATCH_SIZE)?;
        queries
            .iter()
            .zip(&vectors)
            .map(|((id, _), v)| self.search_vector(id, v, k, pooling))
            .collect()
    }

    /// Writes the versioned binary layout:
    /// magic, version, provider name, dim, chunk count, little-endian f32
    /// rows, then the (chunk id, article id) table.
    pub fn save(&self, mut w: impl Write) -> Result<(), DenseError> {
        w.write_all(STORE_MAGIC)?;
        w.write_all(&STORE_VERSION.to_le_bytes())?;
        write_str(&mut w, &self.provider_name)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for x in &self.rows {
            w.write_all(&x.to_le_bytes())?;
        }
        for (id, article) in self.chunk_ids.iter().zip(&self.chunk_articles) {
            write_str(&mut w, id)?;
            write_str(&mut w, article)?;
        }
        Ok(())
    }

    pub fn load(mut r: impl Read) -> Result<Self, DenseError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| DenseError::Format("truncated header".into()))?;
        if &magic != STORE_MAGIC {
            return Err(DenseError::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != STORE_VERSION {
            return Err(DenseError::Format(format!(
                "unsupported version {version} (expected {STORE_VERSION})"
            )));
        }
        let provider_name = read_str(&mut r)?;
        let dim = read_u32(&mut r)? as usize;
        let n = read_u64(&mut r)? as usize;
        if dim == 0 {
            return Err(DenseError::Format("dim is 0".into()));
        }
        let total = n
            .checked_mul(dim)
            .ok_or_else(|| DenseError::Format("row count overflows".into()))?;
        let mut rows = Vec::with_capacity(total.min(1 << 24));
        let mut buf = [0u8; 4];
        for _ in 0..total {
            r.read_exact(&mut buf)
                .map_err(|_| DenseError::Format("truncated rows".into()))?;
            let x = f32::from_le_bytes(buf);
            if !x.is_finite() {
                return Err(DenseError::Format("non-finite component".into()));
            }
            rows.push(x);
        }
        let mut chunk_ids = Vec::with_capacity(n.min(1 << 20));
        let mut chunk_articles = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            chunk_ids.push(read_str(&mut r)?);
            chunk_articles.push(read_str(&mut r)?);
        }
        Ok(Self {
            provider_name,
            dim,
            chunk_ids,
            chunk_articles,
            rows,
        })
    }
}

fn write_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_u32(r: &mut impl Read) -> Result<u32, DenseError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| DenseError::Format("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64, DenseError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| DenseError::Format("truncated header".into()))?;
    Ok(u64::from_le_bytes(b))
}

fn read_str(r: &mut impl Read) -> Result<String, DenseError> {
    let len = read_u32(r)? as usize;
    if len > 1 << 20 {
        return Err(DenseError::Format(format!("string length {len} too large")));
    }
    let mut b = vec![0u8; len];
    r.read_exact(&mut b)
        .map_err(|_| DenseError::Format("truncated string".into()))?;
    String::from_utf8(b).map_err(|_| DenseError::Format("string is not UTF-8".into()))
}

/// Dense `rows × cols` matrix of cosine similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged similarity rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// `M[i][j] = cosine(embed(a[i]), embed(b[j]))`.
pub fn pairwise_similarities<S: AsRef<str>, T: AsRef<str>>(
    a: &[S],
    b: &[T],
    provider: &dyn EmbeddingProvider,
) -> Result<SimilarityMatrix, DenseError> {
    if a.is_empty() || b.is_empty() {
        return Err(DenseError::Empty);
    }
    let va: Vec<Vector> = embed_all(provider, a, DEFAULT_BATCH_SIZE)?
        .iter()
        .map(Vector::normalized)
        .collect();
    let vb: Vec<Vector> = embed_all(provider, b, DEFAULT_BATCH_SIZE)?
        .iter()
        .map(Vector::normalized)
        .collect();
    let mut data = Vec::with_capacity(va.len() * vb.len());
    for x in &va {
        for y in &vb {
            data.push(dot(x.as_slice(), y.as_slice()));
        }
    }
    Ok(SimilarityMatrix {
        rows: va.len(),
        cols: vb.len(),
        data,
    })
}
