//! Negative (tweet, fact-check) pairs for match / not-match datasets.
//!
//! The corpus holds positives only. Negatives come from one of two
//! strategies, always drawn inside a single language-pair partition:
//!
//! * random: seeded uniform sampling of non-matching (tweet, article) pairs;
//! * hard: every non-matching pair is scored by embedding cosine, pairs at or
//!   above the similarity ceiling are dropped as likely unlabeled matches, and
//!   the most similar remaining pairs are kept.

use std::collections::{BTreeSet, HashSet};

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{query_text, Article, Corpus, Label, LangPair, Pair, PairSource};
use crate::dense::{pairwise_similarities, DenseError, SimilarityMatrix};
use crate::providers::EmbeddingProvider;
use crate::ranking::rank_order;
use crate::textproc::truncate_tokens;

pub const DEFAULT_SIMILARITY_CEILING: f64 = 0.7;

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("invalid mining configuration: {0}")]
    InvalidConfig(String),
    #[error("partition {0} has no non-matching (tweet, article) candidates")]
    TooSmall(String),
    #[error("hard mining needs an embedding provider")]
    MissingProvider,
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error("pair ({0}, {1}) appears among both positives and negatives")]
    Overlap(String, String),
    #[error("pair ({0}, {1}) appears more than once")]
    Duplicate(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    #[default]
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    pub strategy: Strategy,
    pub similarity_ceiling: f64,
    pub negatives_per_positive: usize,
    pub seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Hard,
            similarity_ceiling: DEFAULT_SIMILARITY_CEILING,
            negatives_per_positive: 1,
            seed: 0,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<(), MiningError> {
        if !(self.similarity_ceiling > 0.0 && self.similarity_ceiling <= 1.0) {
            return Err(MiningError::InvalidConfig(format!(
                "similarity_ceiling must be in (0, 1], got {}",
                self.similarity_ceiling
            )));
        }
        if self.negatives_per_positive == 0 {
            return Err(MiningError::InvalidConfig(
                "negatives_per_positive must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Article text compared against tweets when mining: the body paragraphs,
/// cut to the embedding model's input limit.
pub fn mining_text(article: &Article, max_tokens: usize) -> String {
    truncate_tokens(&article.full_text(false), max_tokens).to_string()
}

fn negative(tweet_id: &str, article_id: &str, source: PairSource, similarity: Option<f64>) -> Pair {
    Pair {
        tweet_id: tweet_id.to_string(),
        article_id: article_id.to_string(),
        label: Label::NotMatch,
        source,
        similarity,
    }
}

struct PartitionView<'a> {
    tweets: Vec<&'a crate::corpus::Tweet>,
    articles: Vec<&'a Article>,
    positives: BTreeSet<(String, String)>,
}

impl<'a> PartitionView<'a> {
    fn new(corpus: &'a Corpus, lp: LangPair) -> Self {
        Self {
            tweets: corpus.partition_tweets(lp),
            articles: corpus.partition_articles(lp),
            positives: corpus.positive_keys(lp),
        }
    }

    fn is_positive(&self, t: usize, a: usize) -> bool {
        self.positives
            .contains(&(self.tweets[t].id.clone(), self.articles[a].id.clone()))
    }

    fn available(&self) -> usize {
        self.tweets.len() * self.articles.len() - self.positives.len()
    }
}

/// Seeded uniform sample of non-matching pairs, sorted by (tweet, article).
pub fn mine_random(
    corpus: &Corpus,
    lp: LangPair,
    cfg: &MiningConfig,
) -> Result<Vec<Pair>, MiningError> {
    cfg.validate()?;
    let view = PartitionView::new(corpus, lp);
    let available = view.available();
    if available == 0 {
        return Err(MiningError::TooSmall(lp.to_string()));
    }
    let need = (cfg.negatives_per_positive * view.positives.len()).min(available);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (nt, na) = (view.tweets.len(), view.articles.len());

    let mut chosen: Vec<(usize, usize)> = if need * 2 > available {
        let candidates: Vec<(usize, usize)> = (0..nt)
            .flat_map(|t| (0..na).map(move |a| (t, a)))
            .filter(|&(t, a)| !view.is_positive(t, a))
            .collect();
        rand::seq::index::sample(&mut rng, candidates.len(), need)
            .into_iter()
            .map(|i| candidates[i])
            .collect()
    } else {
        let mut seen = HashSet::with_capacity(need);
        while seen.len() < need {
            let (t, a) = (rng.gen_range(0..nt), rng.gen_range(0..na));
            if !view.is_positive(t, a) {
                seen.insert((t, a));
            }
        }
        seen.into_iter().collect()
    };
    chosen.sort_unstable();
    Ok(chosen
        .into_iter()
        .map(|(t, a)| negative(&view.tweets[t].id, &view.articles[a].id, PairSource::MinedRandom, None))
        .collect())
}

/// Picks hard negatives from a precomputed similarity matrix
/// (`sims[i][j]` for `tweet_ids[i]`, `article_ids[j]`).
///
/// Positives and pairs with similarity `>= ceiling` are excluded; the rest
/// are ordered by similarity descending, ties by (tweet id, article id), and
/// the first `count` are returned.
pub fn select_hard_negatives(
    tweet_ids: &[&str],
    article_ids: &[&str],
    sims: &SimilarityMatrix,
    positives: &BTreeSet<(String, String)>,
    ceiling: f64,
    count: usize,
) -> Result<Vec<Pair>, MiningError> {
    assert_eq!(sims.shape(), (tweet_ids.len(), article_ids.len()));
    let mut any_candidate = false;
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    for (i, t) in tweet_ids.iter().enumerate() {
        for (j, a) in article_ids.iter().enumerate() {
            if positives.contains(&(t.to_string(), a.to_string())) {
                continue;
            }
            any_candidate = true;
            let s = sims.get(i, j);
            if s < ceiling {
                kept.push((i, j, s));
            }
        }
    }
    if !any_candidate {
        return Err(MiningError::TooSmall(format!(
            "{}x{}",
            tweet_ids.len(),
            article_ids.len()
        )));
    }
    if kept.is_empty() {
        warn!("every candidate pair has similarity >= {ceiling}; no hard negatives");
    }
    kept.sort_by(|x, y| {
        rank_order(("", x.2), ("", y.2))
            .then_with(|| tweet_ids[x.0].cmp(tweet_ids[y.0]))
            .then_with(|| article_ids[x.1].cmp(article_ids[y.1]))
    });
    kept.truncate(count);
    Ok(kept
        .into_iter()
        .map(|(i, j, s)| negative(tweet_ids[i], article_ids[j], PairSource::MinedHard, Some(s)))
        .collect())
}

/// Hard negatives for one partition, using `provider` embeddings of tweet
/// query texts and truncated article bodies.
pub fn mine_hard(
    corpus: &Corpus,
    lp: LangPair,
    provider: &dyn EmbeddingProvider,
    cfg: &MiningConfig,
) -> Result<Vec<Pair>, MiningError> {
    cfg.validate()?;
    let view = PartitionView::new(corpus, lp);
    if view.available() == 0 {
        return Err(MiningError::TooSmall(lp.to_string()));
    }
    let tweet_texts: Vec<String> = view.tweets.iter().map(|t| query_text(t)).collect();
    let article_texts: Vec<String> = view
        .articles
        .iter()
        .map(|a| mining_text(a, provider.max_tokens()))
        .collect();
    let sims = pairwise_similarities(&tweet_texts, &article_texts, provider)?;
    let tweet_ids: Vec<&str> = view.tweets.iter().map(|t| t.id.as_str()).collect();
    let article_ids: Vec<&str> = view.articles.iter().map(|a| a.id.as_str()).collect();
    let count = cfg.negatives_per_positive * view.positives.len();
    select_hard_negatives(
        &tweet_ids,
        &article_ids,
        &sims,
        &view.positives,
        cfg.similarity_ceiling,
        count,
    )
}

/// Dispatches on `cfg.strategy`.
pub fn mine(
    corpus: &Corpus,
    lp: LangPair,
    provider: Option<&dyn EmbeddingProvider>,
    cfg: &MiningConfig,
) -> Result<Vec<Pair>, MiningError> {
    match cfg.strategy {
        Strategy::Random => mine_random(corpus, lp, cfg),
        Strategy::Hard => mine_hard(corpus, lp, provider.ok_or(MiningError::MissingProvider)?, cfg),
    }
}

/// Distinct positive pairs of a partition, sorted.
pub fn partition_positives(corpus: &Corpus, lp: LangPair) -> Vec<Pair> {
    corpus
        .positive_keys(lp)
        .into_iter()
        .map(|(t, a)| Pair::positive(t, a))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    /// `en-en`, `hi-en`, ... or `all` for pooled datasets.
    pub partition: String,
    pub pairs: Vec<Pair>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// (match, not_match) counts.
    pub fn label_counts(&self) -> (usize, usize) {
        let m = self.pairs.iter().filter(|p| p.label == Label::Match).count();
        (m, self.pairs.len() - m)
    }
}

/// Merges disjoint positive and negative pairs and shuffles them with `seed`.
pub fn assemble(
    partition: impl Into<String>,
    positives: Vec<Pair>,
    negatives: Vec<Pair>,
    seed: u64,
) -> Result<LabeledDataset, MiningError> {
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for p in &positives {
        if !seen.insert((p.tweet_id.clone(), p.article_id.clone())) {
            return Err(MiningError::Duplicate(p.tweet_id.clone(), p.article_id.clone()));
        }
    }
    let pos_keys = seen.clone();
    for n in &negatives {
        let key = (n.tweet_id.clone(), n.article_id.clone());
        if pos_keys.contains(&key) {
            return Err(MiningError::Overlap(key.0, key.1));
        }
        if !seen.insert(key) {
            return Err(MiningError::Duplicate(n.tweet_id.clone(), n.article_id.clone()));
        }
    }
    let mut pairs = positives;
    pairs.extend(negatives);
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(LabeledDataset {
        partition: partition.into(),
        pairs,
    })
}

/// Concatenates partition datasets and reshuffles them as one.
pub fn pool(datasets: &[LabeledDataset], seed: u64) -> LabeledDataset {
    let mut pairs: Vec<Pair> = datasets.iter().flat_map(|d| d.pairs.iter().cloned()).collect();
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    LabeledDataset {
        partition: "all".into(),
        pairs,
    }
}
