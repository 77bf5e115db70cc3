//! Okapi BM25 over an in-memory inverted index.
//!
//! Scoring follows the Lucene/Elasticsearch variant:
//!
//! ```text
//! idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
//! score(q, d) = Σ_{t ∈ set(q)} idf(t) · tf·(k1 + 1) / (tf + k1·(1 - b + b·dl/avgdl))
//! ```
//!
//! Repeated query terms are scored once. An index is built either over whole
//! articles or over paragraph chunks; paragraph scores collapse onto their
//! article by taking the maximum.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{chunk_article, Article, ChunkConfig};
use crate::ranking::RankedList;
use crate::textproc::terms;

pub const INDEX_MAGIC: &str = "claimmatch-bm25";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum Bm25Error {
    #[error("cannot build an index from an empty unit collection")]
    EmptyCollection,
    #[error("no unit contains any token")]
    NoTokens,
    #[error("duplicate unit id {0:?}")]
    DuplicateUnit(String),
    #[error("full-article index requires unit id == article id, got unit {unit_id:?} for article {article_id:?}")]
    NotIdentity { unit_id: String, article_id: String },
    #[error("unknown unit id {0:?}")]
    UnknownUnit(String),
    #[error("invalid BM25 parameters: {0}")]
    InvalidParams(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("index file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), Bm25Error> {
        if !(self.k1.is_finite() && self.k1 >= 0.0) {
            return Err(Bm25Error::InvalidParams(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Bm25Error::InvalidParams(format!("b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    FullArticle,
    Paragraph,
}

/// One retrieval unit handed to [`Bm25Index::build`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexUnit {
    pub unit_id: String,
    pub article_id: String,
    pub text: String,
}

/// Retrieval units for `articles`: whole article text, or paragraph chunks.
pub fn index_units<'a>(
    articles: impl IntoIterator<Item = &'a Article>,
    granularity: Granularity,
    chunking: &ChunkConfig,
) -> Vec<IndexUnit> {
    let mut units = Vec::new();
    for a in articles {
        match granularity {
            Granularity::FullArticle => units.push(IndexUnit {
                unit_id: a.id.clone(),
                article_id: a.id.clone(),
                text: a.full_text(chunking.include_title),
            }),
            Granularity::Paragraph => {
                units.extend(chunk_article(a, chunking).into_iter().map(|c| IndexUnit {
                    unit_id: c.chunk_id(),
                    article_id: c.article_id,
                    text: c.text,
                }))
            }
        }
    }
    units
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub unit: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bm25Index {
    params: Bm25Params,
    granularity: Granularity,
    unit_ids: Vec<String>,
    unit_articles: Vec<String>,
    doc_len: Vec<u32>,
    avg_dl: f64,
    postings: BTreeMap<String, Vec<Posting>>,
    #[serde(skip)]
    unit_lookup: HashMap<String, u32>,
}

fn distinct_in_order(query_terms: &[String]) -> Vec<&str> {
    let mut seen = HashSet::new();
    query_terms
        .iter()
        .map(String::as_str)
        .filter(|t| seen.insert(*t))
        .collect()
}

impl Bm25Index {
    pub fn build(
        units: impl IntoIterator<Item = IndexUnit>,
        params: Bm25Params,
        granularity: Granularity,
    ) -> Result<Self, Bm25Error> {
        params.validate()?;
        let mut index = Bm25Index {
            params,
            granularity,
            unit_ids: Vec::new(),
            unit_articles: Vec::new(),
            doc_len: Vec::new(),
            avg_dl: 0.0,
            postings: BTreeMap::new(),
            unit_lookup: HashMap::new(),
        };
        let mut total_len: u64 = 0;
        for unit in units {
            if granularity == Granularity::FullArticle && unit.unit_id != unit.article_id {
                return Err(Bm25Error::NotIdentity {
                    unit_id: unit.unit_id,
                    article_id: unit.article_id,
                });
            }
            let id = index.unit_ids.len() as u32;
            if index.unit_lookup.insert(unit.unit_id.clone(), id).is_some() {
                return Err(Bm25Error::DuplicateUnit(unit.unit_id));
            }
            let toks = terms(&unit.text);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in &toks {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for (term, count) in tf {
                index.postings.entry(term).or_default().push(Posting { unit: id, tf: count });
            }
            total_len += toks.len() as u64;
            index.doc_len.push(toks.len() as u32);
            index.unit_ids.push(unit.unit_id);
            index.unit_articles.push(unit.article_id);
        }
        if index.unit_ids.is_empty() {
            return Err(Bm25Error::EmptyCollection);
        }
        if total_len == 0 {
            return Err(Bm25Error::NoTokens);
        }
        index.avg_dl = total_len as f64 / index.unit_ids.len() as f64;
        Ok(index)
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn n_units(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn avg_dl(&self) -> f64 {
        self.avg_dl
    }

    pub fn doc_len(&self, unit_id: &str) -> Option<u32> {
        self.unit_lookup.get(unit_id).map(|&i| self.doc_len[i as usize])
    }

    pub fn article_of(&self, unit_id: &str) -> Option<&str> {
        self.unit_lookup
            .get(unit_id)
            .map(|&i| self.unit_articles[i as usize].as_str())
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    /// Postings for an already case-folded term, sorted by unit.
    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.n_units() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    #[inline]
    fn term_weight(&self, idf: f64, tf: u32, dl: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = tf as f64;
        let norm = 1.0 - b + b * dl as f64 / self.avg_dl;
        idf * tf * (k1 + 1.0) / (tf + k1 * norm)
    }

    /// BM25 score of one unit for case-folded `query_terms`.
    pub fn score(&self, query_terms: &[String], unit_id: &str) -> Result<f64, Bm25Error> {
        let &unit = self
            .unit_lookup
            .get(unit_id)
            .ok_or_else(|| Bm25Error::UnknownUnit(unit_id.to_string()))?;
        let dl = self.doc_len[unit as usize];
        let mut total = 0.0;
        for term in distinct_in_order(query_terms) {
            let postings = self.postings(term);
            if let Ok(pos) = postings.binary_search_by_key(&unit, |p| p.unit) {
                total += self.term_weight(self.idf(term), postings[pos].tf, dl);
            }
        }
        Ok(total)
    }

    /// Scores of every unit matching at least one query term, by unit index.
    pub fn unit_scores(&self, query_terms: &[String]) -> Vec<(u32, f64)> {
        let mut acc = vec![0.0f64; self.n_units()];
        let mut hit = vec![false; self.n_units()];
        for term in distinct_in_order(query_terms) {
            let idf = self.idf(term);
            for p in self.postings(term) {
                let u = p.unit as usize;
                acc[u] += self.term_weight(idf, p.tf, self.doc_len[u]);
                hit[u] = true;
            }
        }
        (0..self.n_units() as u32)
            .filter(|&u| hit[u as usize])
            .map(|u| (u, acc[u as usize]))
            .collect()
    }

    /// Top-`k` articles for `query_text`. Paragraph units collapse onto their
    /// article by maximum score. Queries without any indexed term return an
    /// empty list.
    pub fn search(&self, query_id: &str, query_text: &str, k: usize) -> RankedList {
        self.search_terms(query_id, &terms(query_text), k)
    }

    pub fn search_terms(&self, query_id: &str, query_terms: &[String], k: usize) -> RankedList {
        let mut best: HashMap<&str, f64> = HashMap::new();
        for (u, s) in self.unit_scores(query_terms) {
            let article = self.unit_articles[u as usize].as_str();
            let slot = best.entry(article).or_insert(f64::NEG_INFINITY);
            *slot = slot.max(s);
        }
        RankedList::from_scores(
            query_id,
            best.into_iter().map(|(a, s)| (a.to_string(), s)),
            k,
        )
    }

    pub fn save(&self, w: impl Write) -> Result<(), Bm25Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            magic: &'a str,
            version: u32,
            index: &'a Bm25Index,
        }
        serde_json::to_writer(
            w,
            &Out {
                magic: INDEX_MAGIC,
                version: INDEX_VERSION,
                index: self,
            },
        )
        .map_err(|e| Bm25Error::Format(e.to_string()))
    }

    pub fn load(r: impl Read) -> Result<Self, Bm25Error> {
        #[derive(Deserialize)]
        struct In {
            magic: String,
            version: u32,
            index: serde_json::Value,
        }
        let file: In = serde_json::from_reader(r).map_err(|e| Bm25Error::Format(e.to_string()))?;
        if file.magic != INDEX_MAGIC {
            return Err(Bm25Error::Format(format!("bad magic {:?}", file.magic)));
        }
        if file.version != INDEX_VERSION {
            return Err(Bm25Error::Format(format!(
                "unsupported version {} (expected {INDEX_VERSION})",
                file.version
            )));
        }
        let mut index: Bm25Index =
            serde_json::from_value(file.index).map_err(|e| Bm25Error::Format(e.to_string()))?;
        if index.unit_ids.len() != index.doc_len.len()
            || index.unit_ids.len() != index.unit_articles.len()
        {
            return Err(Bm25Error::Format("unit tables have different lengths".into()));
        }
        let n = index.unit_ids.len() as u32;
        if index.postings.values().flatten().any(|p| p.unit >= n) {
            return Err(Bm25Error::Format("posting references a missing unit".into()));
        }
        index.unit_lookup = index
            .unit_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Ok(index)
    }
}
