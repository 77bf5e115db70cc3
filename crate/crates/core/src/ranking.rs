//! Ranked article lists shared by the retrieval systems and the evaluator.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub article_id: String,
    pub score: f64,
}

/// Articles for one query, sorted by score descending with ties broken by
/// ascending article id. Article ids are unique.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<RankedEntry>,
}

/// Descending score, then ascending id.
pub fn rank_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

impl RankedList {
    pub fn new(query_id: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            entries: Vec::new(),
        }
    }

    /// Sorts `scores` into canonical order and keeps the first `k`.
    pub fn from_scores(
        query_id: impl Into<String>,
        scores: impl IntoIterator<Item = (String, f64)>,
        k: usize,
    ) -> Self {
        let mut entries: Vec<RankedEntry> = scores
            .into_iter()
            .map(|(article_id, score)| RankedEntry { article_id, score })
            .collect();
        entries.sort_by(|a, b| rank_order((&a.article_id, a.score), (&b.article_id, b.score)));
        entries.truncate(k);
        Self {
            query_id: query_id.into(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn article_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.article_id.as_str())
    }
}

/// How unit (chunk or paragraph) scores collapse onto their article.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Max,
    Mean,
    Sum,
}

/// Groups `(article_id, unit_score)` pairs by article under `pooling`.
pub fn pool_by_article<'a>(
    unit_scores: impl IntoIterator<Item = (&'a str, f64)>,
    pooling: Pooling,
) -> HashMap<&'a str, f64> {
    let mut acc: HashMap<&str, (f64, usize)> = HashMap::new();
    for (article, score) in unit_scores {
        let slot = acc.entry(article).or_insert((match pooling {
            Pooling::Max => f64::NEG_INFINITY,
            _ => 0.0,
        }, 0));
        match pooling {
            Pooling::Max => slot.0 = slot.0.max(score),
            Pooling::Mean | Pooling::Sum => slot.0 += score,
        }
        slot.1 += 1;
    }
    acc.into_iter()
        .map(|(a, (s, n))| match pooling {
            Pooling::Mean => (a, s / n as f64),
            _ => (a, s),
        })
        .collect()
}
