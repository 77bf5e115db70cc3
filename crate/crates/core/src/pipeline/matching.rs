use log::info;

use super::{selected_partitions, write_file, ExperimentConfig, PipelineError, Providers};
use crate::corpus::{write_pairs_jsonl, Corpus};
use crate::eval::{evaluate_matcher, kfold_split, CosineScorer, MatchReport, PairScorer};
use crate::mining::{assemble, mine, partition_positives, pool, LabeledDataset, Strategy};

/// The built-in cosine scorer over the configured matching embedder.
pub fn default_scorer(cfg: &ExperimentConfig, providers: &Providers) -> Result<CosineScorer, PipelineError> {
    let provider = providers
        .embedder(cfg.matching.embedder.as_deref())
        .ok_or_else(|| PipelineError::Config("matching needs an embedder".into()))?;
    Ok(CosineScorer::new(provider.clone())
        .with_threshold(cfg.matching.threshold)
        .calibrated(cfg.matching.calibrate))
}

/// One dataset per selected partition, then the pooled `all` dataset when
/// `cfg.matching.pooled` is set.
pub fn build_datasets(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
    providers: &Providers,
) -> Result<Vec<LabeledDataset>, PipelineError> {
    let provider = match cfg.mining.strategy {
        Strategy::Hard => Some(
            providers
                .embedder(cfg.mining_embedder.as_deref())
                .ok_or_else(|| PipelineError::Config("hard mining needs an embedder".into()))?
                .as_ref(),
        ),
        Strategy::Random => None,
    };
    let mut datasets = Vec::new();
    for lp in selected_partitions(cfg, corpus)? {
        let negatives = mine(corpus, lp, provider, &cfg.mining)?;
        let positives = partition_positives(corpus, lp);
        info!("{lp}: {} positives, {} mined negatives", positives.len(), negatives.len());
        datasets.push(assemble(lp.to_string(), positives, negatives, cfg.seed)?);
    }
    if cfg.matching.pooled {
        let pooled = pool(&datasets, cfg.seed);
        datasets.push(pooled);
    }
    Ok(datasets)
}

/// Mines and assembles datasets, writes them as JSONL and cross-validates
/// `scorer` on each.
pub fn run_matching_experiment(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
    providers: &Providers,
    scorer: &mut dyn PairScorer,
) -> Result<MatchReport, PipelineError> {
    let datasets = build_datasets(cfg, corpus, providers)?;
    let mut report = MatchReport::default();
    for d in &datasets {
        let mut buf = Vec::new();
        write_pairs_jsonl(&d.pairs, &mut buf).map_err(|e| PipelineError::io(&cfg.out_dir, e))?;
        write_file(&cfg.out_dir.join("datasets").join(format!("{}.jsonl", d.partition)), &buf)?;
        let folds = kfold_split(d, cfg.matching.folds, cfg.seed, cfg.matching.fold_mode)?;
        let result = evaluate_matcher(scorer, corpus, d, &folds)?;
        info!("{}: accuracy {:.4}", d.partition, result.mean.accuracy);
        report.rows.push(result);
    }
    write_file(&cfg.out_dir.join("match_report.json"), report.to_json().as_bytes())?;
    write_file(&cfg.out_dir.join("match_report.txt"), report.to_text().as_bytes())?;
    Ok(report)
}
