use std::collections::BTreeMap;
use std::fmt;

use log::info;
use serde::Serialize;

use super::{selected_partitions, write_file, ExperimentConfig, PipelineError, Providers, RUN_DEPTH};
use crate::bm25::{index_units, Bm25Index, Granularity};
use crate::corpus::{chunk_articles, query_text, ChunkConfig, Corpus, LangPair};
use crate::dense::VectorStore;
use crate::eval::{evaluate_retrieval, trec, Qrels, RetrievalReport, SystemResult};
use crate::providers::translate_batch;
use crate::ranking::RankedList;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum System {
    Bm25(Granularity),
    /// Dense retrieval with the named embedder.
    Dense(String),
}

impl System {
    /// Expands configured system names; `dense` stands for every embedder.
    pub fn expand(names: &[String], providers: &Providers) -> Result<Vec<System>, PipelineError> {
        let mut out = Vec::new();
        for n in names {
            match n.as_str() {
                "bm25-full" => out.push(System::Bm25(Granularity::FullArticle)),
                "bm25-para" => out.push(System::Bm25(Granularity::Paragraph)),
                "dense" => out.extend(providers.embedder_names().map(|e| System::Dense(e.to_string()))),
                other => match other.strip_prefix("dense:") {
                    Some(e) if providers.embedder(Some(e)).is_some() => out.push(System::Dense(e.to_string())),
                    _ => return Err(PipelineError::Config(format!("unknown system {other:?}"))),
                },
            }
        }
        let mut unique: Vec<System> = Vec::with_capacity(out.len());
        for s in out {
            if !unique.contains(&s) {
                unique.push(s);
            }
        }
        Ok(unique)
    }

    /// Name safe to use as a file stem.
    fn file_stem(&self) -> String {
        self.to_string().replace(':', "_")
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            System::Bm25(Granularity::FullArticle) => f.write_str("bm25-full"),
            System::Bm25(Granularity::Paragraph) => f.write_str("bm25-para"),
            System::Dense(e) => write!(f, "dense:{e}"),
        }
    }
}

#[derive(Serialize)]
struct QueryLogLine<'a> {
    query_id: &'a str,
    text: &'a str,
}

fn query_log(queries: &[(String, String)]) -> Vec<u8> {
    let mut out = Vec::new();
    for (id, text) in queries {
        serde_json::to_writer(&mut out, &QueryLogLine { query_id: id, text }).expect("log line serializes");
        out.push(b'\n');
    }
    out
}

/// Runs every configured system on every selected partition, writes runs,
/// query logs, qrels and the consolidated report under `cfg.out_dir`.
pub fn run_retrieval_experiment(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
    providers: &Providers,
) -> Result<RetrievalReport, PipelineError> {
    if cfg.systems.is_empty() {
        return Err(PipelineError::NoSystems);
    }
    let systems = System::expand(&cfg.systems, providers)?;
    if systems.is_empty() {
        return Err(PipelineError::NoSystems);
    }
    let partitions = selected_partitions(cfg, corpus)?;
    let mut report = RetrievalReport::default();

    for lp in partitions {
        let qrels = Qrels::from_corpus(corpus, lp);
        let mut qrels_file = Vec::new();
        trec::write_qrels(&qrels, &mut qrels_file).map_err(|e| PipelineError::io(&cfg.out_dir, e))?;
        write_file(&cfg.out_dir.join("qrels").join(format!("{lp}.qrels")), &qrels_file)?;

        let articles = corpus.partition_articles(lp);
        let raw: Vec<(String, String)> = corpus
            .partition_tweets(lp)
            .into_iter()
            .map(|t| (t.id.clone(), query_text(t)))
            .collect();
        let mut translated: Option<Vec<(String, String)>> = None;

        for system in &systems {
            let queries: &[(String, String)] = match system {
                System::Bm25(_) if lp.is_cross_lingual() => {
                    if translated.is_none() {
                        translated = Some(translate_queries(&raw, lp, providers)?);
                    }
                    translated.as_deref().unwrap()
                }
                _ => &raw,
            };
            let rankings: Vec<RankedList> = match system {
                System::Bm25(gran) => {
                    let units = index_units(articles.iter().copied(), *gran, &cfg.chunking);
                    let index = Bm25Index::build(units, cfg.bm25, *gran)?;
                    queries
                        .iter()
                        .map(|(id, text)| index.search(id, text, RUN_DEPTH))
                        .collect()
                }
                System::Dense(name) => {
                    let provider = providers
                        .embedder(Some(name))
                        .ok_or_else(|| PipelineError::Config(format!("unknown embedder {name:?}")))?;
                    let chunking = ChunkConfig {
                        token_limit: cfg.chunking.token_limit.min(provider.max_tokens()),
                        ..cfg.chunking
                    };
                    let chunks = chunk_articles(articles.iter().copied(), &chunking);
                    let store = VectorStore::build(provider.as_ref(), &chunks)?;
                    store.search_many(provider.as_ref(), queries, RUN_DEPTH, cfg.pooling)?
                }
            };

            let label = system.to_string();
            let stem = system.file_stem();
            let mut run_file = Vec::new();
            trec::write_run(&rankings, &label, &mut run_file).map_err(|e| PipelineError::io(&cfg.out_dir, e))?;
            let part_dir = lp.to_string();
            write_file(&cfg.out_dir.join("runs").join(&part_dir).join(format!("{stem}.run")), &run_file)?;
            write_file(
                &cfg.out_dir.join("queries").join(&part_dir).join(format!("{stem}.jsonl")),
                &query_log(queries),
            )?;

            let run: BTreeMap<String, RankedList> =
                rankings.into_iter().map(|r| (r.query_id.clone(), r)).collect();
            let scores = evaluate_retrieval(&run, &qrels, &cfg.ks)?;
            info!("{lp} {label}: MAP@1 {:.4} MRR {:.4}", scores.map[&cfg.ks[0]], scores.mrr);
            report.rows.push(SystemResult::new(label, Some(lp.to_string()), scores));
        }
    }

    write_file(&cfg.out_dir.join("retrieval_report.json"), report.to_json().as_bytes())?;
    write_file(&cfg.out_dir.join("retrieval_report.txt"), report.to_text().as_bytes())?;
    Ok(report)
}

fn translate_queries(
    raw: &[(String, String)],
    lp: LangPair,
    providers: &Providers,
) -> Result<Vec<(String, String)>, PipelineError> {
    let translator = providers.translator().ok_or(PipelineError::MissingTranslator(lp))?;
    let texts: Vec<&str> = raw.iter().map(|(_, t)| t.as_str()).collect();
    let out = translate_batch(translator.as_ref(), &texts, lp.tweet, lp.article)?;
    Ok(raw.iter().map(|(id, _)| id.clone()).zip(out).collect())
}
