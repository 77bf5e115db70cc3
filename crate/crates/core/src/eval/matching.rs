use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use super::{EvalError, Fold};
use crate::corpus::{query_text, Corpus, Label};
use crate::dense::cosine;
use crate::mining::LabeledDataset;
use crate::providers::{embed_batch, EmbeddingProvider, Vector};

/// A match / not-match classifier over (tweet text, article text) pairs.
///
/// `score` returns values in `[0, 1]`; a pair is labeled match iff its score
/// is at least [`threshold`](Self::threshold).
pub trait PairScorer {
    fn name(&self) -> &str;

    fn threshold(&self) -> f64 {
        0.5
    }

    /// Called with each fold's training pairs before its test pairs are scored.
    fn fit(&mut self, _train: &[(&str, &str, Label)]) -> Result<(), EvalError> {
        Ok(())
    }

    fn score(&mut self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, EvalError>;
}

/// Cosine of provider embeddings mapped from `[-1, 1]` to `[0, 1]`.
///
/// With calibration on, `fit` moves the threshold to the value that maximizes
/// accuracy on the training pairs.
pub struct CosineScorer {
    provider: Arc<dyn EmbeddingProvider>,
    name: String,
    threshold: f64,
    calibrate: bool,
    cache: HashMap<String, Vector>,
}

impl CosineScorer {
    pub fn new(provider: Arc<dyn EmbeddingProvider>) -> Self {
        Self {
            name: format!("cosine:{}", provider.name()),
            provider,
            threshold: 0.5,
            calibrate: false,
            cache: HashMap::new(),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold.clamp(0.0, 1.0);
        self
    }

    pub fn calibrated(mut self, on: bool) -> Self {
        self.calibrate = on;
        self
    }

    fn embed_missing(&mut self, texts: &[&str]) -> Result<(), EvalError> {
        let mut missing: Vec<&str> = texts
            .iter()
            .copied()
            .filter(|t| !self.cache.contains_key(*t))
            .collect();
        missing.sort_unstable();
        missing.dedup();
        for batch in missing.chunks(crate::dense::DEFAULT_BATCH_SIZE) {
            let vectors = embed_batch(self.provider.as_ref(), batch)?;
            for (t, v) in batch.iter().zip(vectors) {
                self.cache.insert(t.to_string(), v);
            }
        }
        Ok(())
    }
}

/// Threshold with the highest accuracy on `(score, is_match)` samples. Cuts
/// sit midway between adjacent distinct scores; ties keep the lowest cut.
fn best_threshold(samples: &mut [(f64, bool)]) -> f64 {
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_pos = samples.iter().filter(|s| s.1).count();
    // Threshold below every score: all predicted match.
    let mut correct = total_pos;
    let mut best = (correct, samples.first().map_or(0.5, |s| s.0 / 2.0));
    let mut i = 0;
    while i < samples.len() {
        let v = samples[i].0;
        while i < samples.len() && samples[i].0 == v {
            if samples[i].1 {
                correct -= 1;
            } else {
                correct += 1;
            }
            i += 1;
        }
        let next = samples.get(i).map_or(1.0, |s| s.0);
        if correct > best.0 {
            best = (correct, (v + next) / 2.0);
        }
    }
    best.1.clamp(0.0, 1.0)
}

impl PairScorer for CosineScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn fit(&mut self, train: &[(&str, &str, Label)]) -> Result<(), EvalError> {
        if !self.calibrate || train.is_empty() {
            return Ok(());
        }
        let pairs: Vec<(&str, &str)> = train.iter().map(|&(t, a, _)| (t, a)).collect();
        let scores = self.score(&pairs)?;
        let mut samples: Vec<(f64, bool)> = scores
            .into_iter()
            .zip(train)
            .map(|(s, &(_, _, l))| (s, l == Label::Match))
            .collect();
        self.threshold = best_threshold(&mut samples);
        Ok(())
    }

    fn score(&mut self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, EvalError> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let texts: Vec<&str> = pairs.iter().flat_map(|&(t, a)| [t, a]).collect();
        self.embed_missing(&texts)?;
        pairs
            .iter()
            .map(|&(t, a)| {
                let c = cosine(self.cache[t].as_slice(), self.cache[a].as_slice())?;
                Ok(((c + 1.0) / 2.0).clamp(0.0, 1.0))
            })
            .collect()
    }
}

/// Binary confusion counts with match as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 || tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

impl Confusion {
    pub fn from_predictions(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut c = Self::default();
        for (gold, pred) in pairs {
            match (gold, pred) {
                (Label::Match, Label::Match) => c.tp += 1,
                (Label::NotMatch, Label::Match) => c.fp += 1,
                (Label::Match, Label::NotMatch) => c.fn_ += 1,
                (Label::NotMatch, Label::NotMatch) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }

    pub fn f1_pos(&self) -> f64 {
        f1(self.tp, self.fp, self.fn_)
    }

    /// F1 with not-match as the positive class.
    pub fn f1_neg(&self) -> f64 {
        f1(self.tn, self.fn_, self.fp)
    }

    pub fn metrics(&self) -> ClassMetrics {
        ClassMetrics {
            accuracy: self.accuracy(),
            f1_pos: self.f1_pos(),
            f1_neg: self.f1_neg(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClassMetrics {
    pub accuracy: f64,
    pub f1_pos: f64,
    pub f1_neg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_test: usize,
    pub threshold: f64,
    pub confusion: Confusion,
    #[serde(flatten)]
    pub metrics: ClassMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub partition: String,
    pub scorer: String,
    pub n_pairs: usize,
    pub folds: Vec<FoldResult>,
    pub mean: ClassMetrics,
    /// Population standard deviation over folds.
    pub std: ClassMetrics,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Cross-validates `scorer` over `folds` of `dataset`. Texts come from
/// `corpus`: the tweet's query text and the article's full text.
pub fn evaluate_matcher(
    scorer: &mut dyn PairScorer,
    corpus: &Corpus,
    dataset: &LabeledDataset,
    folds: &[Fold],
) -> Result<MatchResult, EvalError> {
    let texts: Vec<(String, String)> = dataset
        .pairs
        .iter()
        .map(|p| match (corpus.tweet(&p.tweet_id), corpus.article(&p.article_id)) {
            (Some(t), Some(a)) => Ok((query_text(t), a.full_text(true))),
            _ => Err(EvalError::UnknownPair(p.tweet_id.clone(), p.article_id.clone())),
        })
        .collect::<Result<_, _>>()?;

    let mut results = Vec::with_capacity(folds.len());
    for (fi, fold) in folds.iter().enumerate() {
        let train: Vec<(&str, &str, Label)> = fold
            .train
            .iter()
            .map(|&i| (texts[i].0.as_str(), texts[i].1.as_str(), dataset.pairs[i].label))
            .collect();
        scorer.fit(&train)?;
        let test: Vec<(&str, &str)> = fold
            .test
            .iter()
            .map(|&i| (texts[i].0.as_str(), texts[i].1.as_str()))
            .collect();
        let scores = scorer.score(&test)?;
        let threshold = scorer.threshold();
        let confusion = Confusion::from_predictions(fold.test.iter().zip(&scores).map(|(&i, &s)| {
            let pred = if s >= threshold { Label::Match } else { Label::NotMatch };
            (dataset.pairs[i].label, pred)
        }));
        results.push(FoldResult {
            fold: fi,
            n_test: fold.test.len(),
            threshold,
            confusion,
            metrics: confusion.metrics(),
        });
    }

    let it = |f: fn(&ClassMetrics) -> f64| results.iter().map(move |r| f(&r.metrics));
    let (acc_m, acc_s) = mean_std(it(|m| m.accuracy));
    let (pos_m, pos_s) = mean_std(it(|m| m.f1_pos));
    let (neg_m, neg_s) = mean_std(it(|m| m.f1_neg));
    Ok(MatchResult {
        partition: dataset.partition.clone(),
        scorer: scorer.name().to_string(),
        n_pairs: dataset.len(),
        mean: ClassMetrics {
            accuracy: acc_m,
            f1_pos: pos_m,
            f1_neg: neg_m,
        },
        std: ClassMetrics {
            accuracy: acc_s,
            f1_pos: pos_s,
            f1_neg: neg_s,
        },
        folds: results,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct MatchReport {
    pub rows: Vec<MatchResult>,
}

impl MatchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Mean ± std per row, in percent.
    pub fn to_text(&self) -> String {
        let sw = self.rows.iter().map(|r| r.scorer.len()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<9} {:<sw$} {:>6} {:>16} {:>16} {:>16}",
            "partition", "scorer", "pairs", "accuracy", "F1+", "F1-"
        );
        let cell = |m: f64, s: f64| format!("{:.2}±{:.2}%", m * 100.0, s * 100.0);
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<9} {:<sw$} {:>6} {:>16} {:>16} {:>16}",
                r.partition,
                r.scorer,
                r.n_pairs,
                cell(r.mean.accuracy, r.std.accuracy),
                cell(r.mean.f1_pos, r.std.f1_pos),
                cell(r.mean.f1_neg, r.std.f1_neg),
            );
        }
        out
    }
}
