use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::Label;
use crate::mining::LabeledDataset;

/// Indices into a dataset's `pairs`, both sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMode {
    /// Each label is shuffled and dealt round-robin across folds.
    #[default]
    Stratified,
    /// All pairs sharing an article land in the same test fold.
    GroupByArticle,
}

/// Splits `dataset` into `k` folds; every record is in exactly one test fold.
pub fn kfold_split(
    dataset: &LabeledDataset,
    k: usize,
    seed: u64,
    mode: FoldMode,
) -> Result<Vec<Fold>, EvalError> {
    let n = dataset.len();
    if k < 2 || n < k {
        return Err(EvalError::TooSmall { size: n, k });
    }
    let (matches, non_matches) = dataset.label_counts();
    if matches == 0 || non_matches == 0 {
        return Err(EvalError::SingleLabel);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; n];
    match mode {
        FoldMode::Stratified => {
            let mut next = 0;
            for label in [Label::Match, Label::NotMatch] {
                let mut idx: Vec<usize> = (0..n).filter(|&i| dataset.pairs[i].label == label).collect();
                idx.shuffle(&mut rng);
                for i in idx {
                    assignment[i] = next;
                    next = (next + 1) % k;
                }
            }
        }
        FoldMode::GroupByArticle => {
            let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, p) in dataset.pairs.iter().enumerate() {
                groups.entry(p.article_id.as_str()).or_default().push(i);
            }
            if groups.len() < k {
                return Err(EvalError::TooSmall { size: groups.len(), k });
            }
            let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
            groups.shuffle(&mut rng);
            // Largest groups first, each into the currently smallest fold.
            groups.sort_by_key(|g| std::cmp::Reverse(g.len()));
            let mut sizes = vec![0usize; k];
            for g in groups {
                let f = (0..k).min_by_key(|&f| (sizes[f], f)).unwrap();
                sizes[f] += g.len();
                for i in g {
                    assignment[i] = f;
                }
            }
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}
