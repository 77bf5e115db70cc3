//! Token-bounded paragraph chunks, the retrieval unit for embedding search
//! and paragraph-level BM25.
//!
//! Each nonempty paragraph becomes one chunk when it fits the token limit.
//! Longer paragraphs are packed greedily sentence by sentence; a single
//! sentence over the limit is cut into fixed token windows.

use serde::{Deserialize, Serialize};

use super::Article;
use crate::textproc::{token_count, token_spans};

pub const DEFAULT_TOKEN_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkConfig {
    pub token_limit: usize,
    /// Treat the article title as paragraph 0.
    pub include_title: bool,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            token_limit: DEFAULT_TOKEN_LIMIT,
            include_title: true,
        }
    }
}

impl ChunkConfig {
    pub fn with_limit(token_limit: usize) -> Self {
        Self {
            token_limit,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParagraphChunk {
    pub article_id: String,
    pub chunk_index: usize,
    /// Position of the source paragraph in the indexed paragraph list.
    pub paragraph_index: usize,
    pub text: String,
    pub token_count: usize,
}

impl ParagraphChunk {
    pub fn chunk_id(&self) -> String {
        format!("{}#{}", self.article_id, self.chunk_index)
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\u{0964}' | '\u{0965}')
}

/// Byte ranges of the sentences in `text`. A sentence ends at terminal
/// punctuation followed by whitespace; the whitespace belongs to neither side.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !is_terminal(c) {
            continue;
        }
        let end = i + c.len_utf8();
        let Some(&(_, next)) = chars.peek() else { break };
        if !next.is_whitespace() {
            continue;
        }
        out.push((start, end));
        while let Some(&(_, w)) = chars.peek() {
            if !w.is_whitespace() {
                break;
            }
            chars.next();
        }
        start = chars.peek().map_or(text.len(), |&(j, _)| j);
    }
    if start < text.len() {
        out.push((start, text.len()));
    }
    out
}

struct Packer<'a> {
    text: &'a str,
    limit: usize,
    pieces: Vec<&'a str>,
    open: Option<(usize, usize, usize)>,
}

impl<'a> Packer<'a> {
    fn flush(&mut self) {
        if let Some((s, e, _)) = self.open.take() {
            self.pieces.push(&self.text[s..e]);
        }
    }

    fn push_sentence(&mut self, s: usize, e: usize) {
        let spans = token_spans(&self.text[s..e]);
        let n = spans.len();
        if n == 0 {
            // Bare punctuation joins the open chunk or is dropped.
            if let Some((os, _, on)) = self.open {
                self.open = Some((os, e, on));
            }
            return;
        }
        if n > self.limit {
            self.flush();
            self.windows(s, e, &spans);
            return;
        }
        match self.open {
            Some((os, _, on)) if on + n <= self.limit => self.open = Some((os, e, on + n)),
            _ => {
                self.flush();
                self.open = Some((s, e, n));
            }
        }
    }

    /// Fixed windows of `limit` tokens. Cuts fall on token starts, so each
    /// window re-tokenizes to exactly its own tokens.
    fn windows(&mut self, s: usize, e: usize, spans: &[(usize, usize)]) {
        let mut j = 0;
        while j < spans.len() {
            let from = if j == 0 { s } else { s + spans[j].0 };
            let next = j + self.limit;
            let to = if next < spans.len() { s + spans[next].0 } else { e };
            self.pieces.push(self.text[from..to].trim_end());
            j = next;
        }
    }
}

fn split_paragraph(text: &str, limit: usize) -> Vec<&str> {
    if token_count(text) <= limit {
        return vec![text];
    }
    let mut packer = Packer {
        text,
        limit,
        pieces: Vec::new(),
        open: None,
    };
    for (s, e) in split_sentences(text) {
        packer.push_sentence(s, e);
    }
    packer.flush();
    packer.pieces
}

/// Splits an article into chunks of at most `cfg.token_limit` tokens.
/// Whitespace-only paragraphs are dropped; chunk indices are dense from 0.
pub fn chunk_article(article: &Article, cfg: &ChunkConfig) -> Vec<ParagraphChunk> {
    let limit = cfg.token_limit.max(1);
    let mut chunks = Vec::new();
    for (paragraph_index, para) in article.paragraphs(cfg.include_title).enumerate() {
        let para = para.trim();
        if para.is_empty() {
            continue;
        }
        for piece in split_paragraph(para, limit) {
            chunks.push(ParagraphChunk {
                article_id: article.id.clone(),
                chunk_index: chunks.len(),
                paragraph_index,
                text: piece.to_string(),
                token_count: token_count(piece),
            });
        }
    }
    chunks
}

pub fn chunk_articles<'a>(
    articles: impl IntoIterator<Item = &'a Article>,
    cfg: &ChunkConfig,
) -> Vec<ParagraphChunk> {
    articles
        .into_iter()
        .flat_map(|a| chunk_article(a, cfg))
        .collect()
}
