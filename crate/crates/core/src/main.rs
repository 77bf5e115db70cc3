use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use claimmatch::bm25::{index_units, Bm25Index, Bm25Params, Granularity};
use claimmatch::corpus::{chunk_articles, query_text, read_dataset, ChunkConfig, Corpus, LangPair};
use claimmatch::dense::VectorStore;
use claimmatch::eval::{
    evaluate_matcher, evaluate_retrieval, kfold_split, trec, CosineScorer, FoldMode, MatchReport,
    RetrievalReport, SystemResult, DEFAULT_KS,
};
use claimmatch::mining::{assemble, mine, partition_positives, MiningConfig, Strategy, DEFAULT_SIMILARITY_CEILING};
use claimmatch::pipeline::{
    build_embedder, load_corpus, read_dictionary, run_experiment, EmbedderKind, EmbedderSpec,
    ExperimentConfig, PipelineError, TRANSLATE_URL_VAR,
};
use claimmatch::providers::{
    translate_batch, DictionaryTranslator, EmbeddingProvider, HttpTranslator, TranslationProvider,
};
use claimmatch::ranking::{Pooling, RankedList};

#[derive(Parser)]
#[command(name = "claimmatch", version, about = "Fact-check retrieval and claim matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a corpus JSONL file and summarize it; optionally write it back normalized.
    Ingest {
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report partition sizes, orphans and duplicate pairs.
    Validate { corpus: PathBuf },
    /// Build a BM25 index over one partition's articles.
    Index {
        corpus: PathBuf,
        #[arg(long, value_enum)]
        granularity: GranularityArg,
        #[arg(long)]
        partition: LangPair,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        bm25: Bm25Args,
        #[arg(long, default_value_t = 512)]
        token_limit: usize,
    },
    /// Embed one partition's paragraph chunks into a vector store.
    EmbedStore {
        corpus: PathBuf,
        #[arg(long)]
        partition: LangPair,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        embedder: EmbedderArgs,
        #[arg(long, default_value_t = 512)]
        token_limit: usize,
    },
    /// Rank a partition's articles for one query, or for every partition tweet as a TREC run.
    Search {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        partition: LangPair,
        #[arg(long, value_enum)]
        system: SystemArg,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Free-text query; every partition tweet when omitted.
        #[arg(long)]
        query: Option<String>,
        /// Prebuilt BM25 index.
        #[arg(long)]
        index: Option<PathBuf>,
        /// Prebuilt vector store.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Tab-separated dictionary for translating cross-lingual BM25 queries.
        #[arg(long)]
        dictionary: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PoolingArg::Max)]
        pooling: PoolingArg,
        #[command(flatten)]
        bm25: Bm25Args,
        #[command(flatten)]
        embedder: EmbedderArgs,
        #[arg(long, default_value_t = 512)]
        token_limit: usize,
    },
    /// Mine negatives for one partition and write the labeled dataset.
    Mine {
        corpus: PathBuf,
        #[arg(long)]
        partition: LangPair,
        #[arg(long, value_enum, default_value_t = StrategyArg::Hard)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = DEFAULT_SIMILARITY_CEILING)]
        ceiling: f64,
        /// Negatives per positive.
        #[arg(long, default_value_t = 1)]
        ratio: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        embedder: EmbedderArgs,
    },
    /// Score a TREC run against qrels.
    EvalRetrieval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS.to_vec())]
        ks: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Cross-validate the cosine scorer on a labeled dataset.
    EvalMatch {
        corpus: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep all pairs of an article in the same fold.
        #[arg(long)]
        group_by_article: bool,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Use the fixed threshold instead of fitting one per fold.
        #[arg(long)]
        no_calibrate: bool,
        #[command(flatten)]
        embedder: EmbedderArgs,
        #[arg(long)]
        json: bool,
    },
    /// Run the experiments described by a JSON or TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GranularityArg {
    Article,
    Paragraph,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::Article => Granularity::FullArticle,
            GranularityArg::Paragraph => Granularity::Paragraph,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SystemArg {
    #[value(name = "bm25-full")]
    Bm25Full,
    #[value(name = "bm25-para")]
    Bm25Para,
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Random,
    Hard,
}

#[derive(Clone, Copy, ValueEnum)]
enum PoolingArg {
    Max,
    Mean,
    Sum,
}

impl From<PoolingArg> for Pooling {
    fn from(p: PoolingArg) -> Self {
        match p {
            PoolingArg::Max => Pooling::Max,
            PoolingArg::Mean => Pooling::Mean,
            PoolingArg::Sum => Pooling::Sum,
        }
    }
}

#[derive(Args)]
struct Bm25Args {
    #[arg(long, default_value_t = 1.2)]
    k1: f64,
    #[arg(long, default_value_t = 0.75)]
    b: f64,
}

impl Bm25Args {
    fn params(&self) -> Bm25Params {
        Bm25Params { k1: self.k1, b: self.b }
    }
}

#[derive(Args)]
struct EmbedderArgs {
    /// `hashed` is built in; `http` calls the service at $EMBED_URL.
    #[arg(long, value_enum, default_value_t = EmbedderArg::Hashed)]
    embedder: EmbedderArg,
    /// Vector size: 384 by default for hashed, asked from the service for http.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    max_tokens: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedderArg {
    Hashed,
    Http,
}

impl EmbedderArgs {
    fn build(&self) -> Result<Arc<dyn EmbeddingProvider>, PipelineError> {
        let spec = match self.embedder {
            EmbedderArg::Hashed => EmbedderSpec {
                dim: Some(self.dim.unwrap_or(384)),
                max_tokens: self.max_tokens,
                ..EmbedderSpec::hashed("hashed", 384)
            },
            EmbedderArg::Http => EmbedderSpec {
                name: "http".into(),
                kind: EmbedderKind::Http,
                dim: self.dim,
                model: Some(
                    self.model
                        .clone()
                        .ok_or_else(|| PipelineError::Config("--model is required with --embedder http".into()))?,
                ),
                url: None,
                max_tokens: self.max_tokens,
            },
        };
        build_embedder(&spec)
    }
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PipelineError::Io { path: path.to_path_buf(), source: e })
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io { path: dir.to_path_buf(), source: e })?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| PipelineError::Io { path: path.to_path_buf(), source: e })
}

fn stdout_err(e: io::Error) -> PipelineError {
    PipelineError::Io { path: PathBuf::from("<stdout>"), source: e }
}

fn partition_or_err(corpus: &Corpus, lp: LangPair) -> Result<(), PipelineError> {
    if corpus.partition_pairs(lp).next().is_none() {
        return Err(PipelineError::EmptyPartition(lp));
    }
    Ok(())
}

fn translator_for(lp: LangPair, dictionary: Option<&Path>) -> Result<Arc<dyn TranslationProvider>, PipelineError> {
    let pair = [(lp.tweet, lp.article)];
    if let Some(path) = dictionary {
        return Ok(Arc::new(DictionaryTranslator::new(pair, read_dictionary(path)?)));
    }
    match std::env::var(TRANSLATE_URL_VAR) {
        Ok(url) if !url.is_empty() => Ok(Arc::new(HttpTranslator::new(url, pair))),
        _ => Err(PipelineError::MissingTranslator(lp)),
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Ingest { corpus, out: dest } => {
            let c = load_corpus(&corpus)?;
            writeln!(
                out,
                "{} tweets, {} articles, {} pairs",
                c.tweets().len(),
                c.articles().len(),
                c.pairs().len()
            )
            .map_err(stdout_err)?;
            for lp in c.partitions() {
                writeln!(out, "{lp}\t{}", c.partition_pairs(lp).count()).map_err(stdout_err)?;
            }
            if let Some(dest) = dest {
                let mut w = create(&dest)?;
                c.write_jsonl(&mut w).and_then(|_| w.flush()).map_err(|e| PipelineError::Io { path: dest, source: e })?;
            }
        }
        Command::Validate { corpus } => {
            let report = load_corpus(&corpus)?.validate();
            write!(out, "{report}").map_err(stdout_err)?;
        }
        Command::Index { corpus, granularity, partition, out: dest, bm25, token_limit } => {
            let c = load_corpus(&corpus)?;
            partition_or_err(&c, partition)?;
            let units = index_units(
                c.partition_articles(partition),
                granularity.into(),
                &ChunkConfig::with_limit(token_limit),
            );
            let index = Bm25Index::build(units, bm25.params(), granularity.into())?;
            let mut w = create(&dest)?;
            index.save(&mut w)?;
            w.flush().map_err(|e| PipelineError::Io { path: dest.clone(), source: e })?;
            writeln!(out, "indexed {} units into {}", index.n_units(), dest.display()).map_err(stdout_err)?;
        }
        Command::EmbedStore { corpus, partition, out: dest, embedder, token_limit } => {
            let c = load_corpus(&corpus)?;
            partition_or_err(&c, partition)?;
            let provider = embedder.build()?;
            let cfg = ChunkConfig::with_limit(token_limit.min(provider.max_tokens()));
            let chunks = chunk_articles(c.partition_articles(partition), &cfg);
            let store = VectorStore::build(provider.as_ref(), &chunks)?;
            let mut w = create(&dest)?;
            store.save(&mut w)?;
            w.flush().map_err(|e| PipelineError::Io { path: dest.clone(), source: e })?;
            writeln!(out, "embedded {} chunks into {}", store.len(), dest.display()).map_err(stdout_err)?;
        }
        Command::Search {
            corpus,
            partition,
            system,
            k,
            query,
            index,
            store,
            dictionary,
            pooling,
            bm25,
            embedder,
            token_limit,
        } => {
            if k == 0 {
                return Err(PipelineError::Config("--k must be >= 1".into()));
            }
            let c = load_corpus(&corpus)?;
            partition_or_err(&c, partition)?;
            let queries: Vec<(String, String)> = match query {
                Some(q) => vec![("query".to_string(), q)],
                None => c
                    .partition_tweets(partition)
                    .into_iter()
                    .map(|t| (t.id.clone(), query_text(t)))
                    .collect(),
            };
            let chunking = ChunkConfig::with_limit(token_limit);
            let (label, rankings): (&str, Vec<RankedList>) = match system {
                SystemArg::Bm25Full | SystemArg::Bm25Para => {
                    let gran = if system == SystemArg::Bm25Full {
                        Granularity::FullArticle
                    } else {
                        Granularity::Paragraph
                    };
                    let index = match index {
                        Some(p) => {
                            let idx = Bm25Index::load(open(&p)?)?;
                            if idx.granularity() != gran {
                                return Err(PipelineError::Config(format!(
                                    "{} holds a {:?} index",
                                    p.display(),
                                    idx.granularity()
                                )));
                            }
                            idx
                        }
                        None => Bm25Index::build(
                            index_units(c.partition_articles(partition), gran, &chunking),
                            bm25.params(),
                            gran,
                        )?,
                    };
                    let queries = if partition.is_cross_lingual() {
                        let t = translator_for(partition, dictionary.as_deref())?;
                        let texts: Vec<&str> = queries.iter().map(|(_, q)| q.as_str()).collect();
                        let translated = translate_batch(t.as_ref(), &texts, partition.tweet, partition.article)?;
                        queries.into_iter().map(|(id, _)| id).zip(translated).collect()
                    } else {
                        queries
                    };
                    let label = if gran == Granularity::FullArticle { "bm25-full" } else { "bm25-para" };
                    (label, queries.iter().map(|(id, q)| index.search(id, q, k)).collect())
                }
                SystemArg::Dense => {
                    let provider = embedder.build()?;
                    let store = match store {
                        Some(p) => VectorStore::load(open(&p)?)?,
                        None => {
                            let cfg = ChunkConfig::with_limit(token_limit.min(provider.max_tokens()));
                            VectorStore::build(provider.as_ref(), &chunk_articles(c.partition_articles(partition), &cfg))?
                        }
                    };
                    ("dense", store.search_many(provider.as_ref(), &queries, k, pooling.into())?)
                }
            };
            trec::write_run(&rankings, label, &mut out).map_err(stdout_err)?;
        }
        Command::Mine { corpus, partition, strategy, ceiling, ratio, seed, out: dest, embedder } => {
            let c = load_corpus(&corpus)?;
            partition_or_err(&c, partition)?;
            let cfg = MiningConfig {
                strategy: match strategy {
                    StrategyArg::Random => Strategy::Random,
                    StrategyArg::Hard => Strategy::Hard,
                },
                similarity_ceiling: ceiling,
                negatives_per_positive: ratio,
                seed,
            };
            cfg.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
            let provider = match cfg.strategy {
                Strategy::Hard => Some(embedder.build()?),
                Strategy::Random => None,
            };
            let negatives = mine(&c, partition, provider.as_deref(), &cfg)?;
            let n_neg = negatives.len();
            let dataset = assemble(partition.to_string(), partition_positives(&c, partition), negatives, seed)?;
            let mut w = create(&dest)?;
            claimmatch::corpus::write_pairs_jsonl(&dataset.pairs, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| PipelineError::Io { path: dest.clone(), source: e })?;
            writeln!(out, "{} pairs ({} negatives) written to {}", dataset.len(), n_neg, dest.display())
                .map_err(stdout_err)?;
        }
        Command::EvalRetrieval { run, qrels, ks, json } => {
            let runs = trec::read_run(open(&run)?)?;
            let qrels = trec::read_qrels(open(&qrels)?)?;
            let system = std::fs::read_to_string(&run)
                .ok()
                .and_then(|t| t.split_whitespace().nth(5).map(str::to_string))
                .unwrap_or_else(|| "run".into());
            let scores = evaluate_retrieval(&runs, &qrels, &ks)?;
            let report = RetrievalReport { rows: vec![SystemResult::new(system, None, scores)] };
            let text = if json { report.to_json() + "\n" } else { report.to_text() };
            out.write_all(text.as_bytes()).map_err(stdout_err)?;
        }
        Command::EvalMatch {
            corpus,
            dataset,
            folds,
            seed,
            group_by_article,
            threshold,
            no_calibrate,
            embedder,
            json,
        } => {
            let c = load_corpus(&corpus)?;
            let pairs = read_dataset(open(&dataset)?)?;
            let name = dataset
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into());
            let ds = claimmatch::mining::LabeledDataset { partition: name, pairs };
            let mode = if group_by_article { FoldMode::GroupByArticle } else { FoldMode::Stratified };
            let folds = kfold_split(&ds, folds, seed, mode)?;
            let mut scorer = CosineScorer::new(embedder.build()?)
                .with_threshold(threshold)
                .calibrated(!no_calibrate);
            let result = evaluate_matcher(&mut scorer, &c, &ds, &folds)?;
            let report = MatchReport { rows: vec![result] };
            let text = if json { report.to_json() + "\n" } else { report.to_text() };
            out.write_all(text.as_bytes()).map_err(stdout_err)?;
        }
        Command::Experiment { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let outcome = run_experiment(&cfg)?;
            if let Some(r) = outcome.retrieval {
                out.write_all(r.to_text().as_bytes()).map_err(stdout_err)?;
            }
            if let Some(m) = outcome.matching {
                out.write_all(m.to_text().as_bytes()).map_err(stdout_err)?;
            }
        }
    }
    Ok(())
}

fn exit_code(e: &PipelineError) -> u8 {
    match e {
        _ if e.is_provider_failure() => 3,
        PipelineError::Config(_) | PipelineError::NoSystems | PipelineError::MissingTranslator(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
