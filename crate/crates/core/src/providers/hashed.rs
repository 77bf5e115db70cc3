//! Feature-hashed character n-gram embedder.
//!
//! Text is lowercased, whitespace runs collapse to one space, and the result
//! is padded with a space on both sides. Every character 3-, 4- and 5-gram is
//! hashed with 64-bit FNV-1a over its UTF-8 bytes: the bucket is
//! `h % dim` and the sign is the top bit of the SplitMix64 finalizer applied
//! to `h` (set = -1). Bucket counts are L2-normalized. Text with no
//! non-whitespace characters embeds to the zero vector.

use super::{EmbeddingProvider, ProviderError, Vector};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const NGRAM_MIN: usize = 3;
const NGRAM_MAX: usize = 5;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct HashedEmbedder {
    name: String,
    dim: usize,
    max_tokens: usize,
}

impl HashedEmbedder {
    pub fn new(dim: usize) -> Result<Self, ProviderError> {
        if dim < 8 {
            return Err(ProviderError::InvalidConfig(format!(
                "hashed embedder needs dim >= 8, got {dim}"
            )));
        }
        Ok(Self {
            name: format!("hashed-ngram-{dim}"),
            dim,
            max_tokens: 512,
        })
    }

    pub fn with_max_tokens(mut self, max_tokens: usize) -> Self {
        self.max_tokens = max_tokens.max(1);
        self
    }

    pub fn embed_one(&self, text: &str) -> Vector {
        let mut normalized = String::with_capacity(text.len() + 2);
        normalized.push(' ');
        for word in text.split_whitespace() {
            for c in word.chars().flat_map(char::to_lowercase) {
                normalized.push(c);
            }
            normalized.push(' ');
        }
        let mut acc = vec![0.0f64; self.dim];
        if normalized.len() > 1 {
            let bounds: Vec<usize> = normalized
                .char_indices()
                .map(|(i, _)| i)
                .chain(std::iter::once(normalized.len()))
                .collect();
            let n_chars = bounds.len() - 1;
            for n in NGRAM_MIN..=NGRAM_MAX {
                for start in 0..n_chars.saturating_sub(n - 1) {
                    let gram = &normalized.as_bytes()[bounds[start]..bounds[start + n]];
                    let h = fnv1a64(gram);
                    let bucket = (h % self.dim as u64) as usize;
                    let sign = if splitmix64(h) >> 63 == 1 { -1.0 } else { 1.0 };
                    acc[bucket] += sign;
                }
            }
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Vector::zeros(self.dim);
        }
        Vector::new(acc.into_iter().map(|x| (x / norm) as f32).collect())
    }
}

impl EmbeddingProvider for HashedEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vector>, ProviderError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}
