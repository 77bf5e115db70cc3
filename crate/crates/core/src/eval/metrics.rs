//! MAP@K and MRR over ranked article lists.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::EvalError;
use crate::corpus::{Corpus, LangPair};
use crate::ranking::RankedList;

/// Cutoffs reported for MAP@K.
pub const DEFAULT_KS: [usize; 5] = [1, 5, 10, 20, 50];

/// Relevant article ids per query. Every relevance set is nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Qrels(BTreeMap<String, BTreeSet<String>>);

impl Qrels {
    pub fn new(map: BTreeMap<String, BTreeSet<String>>) -> Result<Self, EvalError> {
        if let Some((q, _)) = map.iter().find(|(_, rel)| rel.is_empty()) {
            return Err(EvalError::EmptyRelevance(q.clone()));
        }
        Ok(Self(map))
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (q, a) in pairs {
            map.entry(q.to_string()).or_default().insert(a.to_string());
        }
        Self(map)
    }

    /// Tweet id → matching article ids for one partition.
    pub fn from_corpus(corpus: &Corpus, lp: LangPair) -> Self {
        Self::from_pairs(
            corpus
                .partition_pairs(lp)
                .map(|p| (p.tweet_id.as_str(), p.article_id.as_str())),
        )
    }

    pub fn get(&self, query_id: &str) -> Option<&BTreeSet<String>> {
        self.0.get(query_id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.0.iter()
    }
}

/// 1/rank of the first relevant article, 0 when none is retrieved.
pub fn reciprocal_rank(ranking: &RankedList, relevant: &BTreeSet<String>) -> f64 {
    ranking
        .article_ids()
        .position(|a| relevant.contains(a))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Σ_{i≤K} P@i·rel_i / min(|relevant|, K).
pub fn average_precision_at_k(ranking: &RankedList, relevant: &BTreeSet<String>, k: usize) -> f64 {
    if k == 0 || relevant.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, a) in ranking.article_ids().take(k).enumerate() {
        if relevant.contains(a) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / relevant.len().min(k) as f64
}

/// Aggregate scores of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalScores {
    pub map: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub n_queries: usize,
}

/// Mean AP@K and reciprocal rank over every query in `qrels`. Queries absent
/// from the run contribute 0.
pub fn evaluate_retrieval(
    run: &BTreeMap<String, RankedList>,
    qrels: &Qrels,
    ks: &[usize],
) -> Result<RetrievalScores, EvalError> {
    if ks.contains(&0) {
        return Err(EvalError::InvalidK);
    }
    if let Some(q) = run.keys().find(|q| qrels.get(q).is_none()) {
        return Err(EvalError::UnknownQuery(q.clone()));
    }
    let empty = RankedList::default();
    let mut map: BTreeMap<usize, f64> = ks.iter().map(|&k| (k, 0.0)).collect();
    let mut mrr = 0.0;
    for (q, relevant) in qrels.iter() {
        let ranking = run.get(q).unwrap_or(&empty);
        mrr += reciprocal_rank(ranking, relevant);
        for (&k, total) in map.iter_mut() {
            *total += average_precision_at_k(ranking, relevant, k);
        }
    }
    let n = qrels.len();
    let denom = n.max(1) as f64;
    map.values_mut().for_each(|v| *v /= denom);
    Ok(RetrievalScores {
        map,
        mrr: mrr / denom,
        n_queries: n,
    })
}

/// One (partition, system) line of a retrieval report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemResult {
    pub system: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
    pub map: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub n_queries: usize,
}

impl SystemResult {
    pub fn new(system: impl Into<String>, partition: Option<String>, scores: RetrievalScores) -> Self {
        Self {
            system: system.into(),
            partition,
            map: scores.map,
            mrr: scores.mrr,
            n_queries: scores.n_queries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct RetrievalReport {
    pub rows: Vec<SystemResult>,
}

impl RetrievalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned columns, values in percent.
    pub fn to_text(&self) -> String {
        let ks: BTreeSet<usize> = self.rows.iter().flat_map(|r| r.map.keys().copied()).collect();
        let sys_w = self.rows.iter().map(|r| r.system.len()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        let _ = write!(out, "{:<9} {:<sys_w$}", "partition", "system");
        for k in &ks {
            let _ = write!(out, " {:>8}", format!("MAP@{k}"));
        }
        let _ = writeln!(out, " {:>8} {:>7}", "MRR", "queries");
        for r in &self.rows {
            let _ = write!(
                out,
                "{:<9} {:<sys_w$}",
                r.partition.as_deref().unwrap_or("-"),
                r.system
            );
            for k in &ks {
                match r.map.get(k) {
                    Some(v) => {
                        let _ = write!(out, " {:>7.2}%", v * 100.0);
                    }
                    None => {
                        let _ = write!(out, " {:>8}", "-");
                    }
                }
            }
            let _ = writeln!(out, " {:>7.2}% {:>7}", r.mrr * 100.0, r.n_queries);
        }
        out
    }
}
