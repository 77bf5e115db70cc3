//! Tweets, fact-check articles and their (tweet, article) pairs.
//!
//! A [`Corpus`] is read from newline-delimited JSON where each record carries a
//! `kind` of `tweet`, `article` or `pair`. All references are resolved at
//! construction time and the result is immutable.

mod chunk;
mod jsonl;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chunk::{chunk_article, chunk_articles, split_sentences, ChunkConfig, ParagraphChunk};
pub use jsonl::{ingest_corpus, read_dataset, write_pairs_jsonl};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed JSON: {message}")]
    MalformedJson { line: usize, message: String },
    #[error("line {line}: unsupported record kind {kind:?}")]
    UnsupportedKind { line: usize, kind: String },
    #[error("line {line}: invalid record: {message}")]
    InvalidRecord { line: usize, message: String },
    #[error("line {line}: unsupported language code {code:?} (expected one of en, hi, es, pt)")]
    UnsupportedLanguage { line: usize, code: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: pair references unknown {kind} id {id:?}")]
    DanglingReference {
        line: usize,
        kind: &'static str,
        id: String,
    },
}

/// Languages present in the tweet/fact-check dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    En,
    Hi,
    Es,
    Pt,
}

impl Lang {
    pub const ALL: [Lang; 4] = [Lang::En, Lang::Hi, Lang::Es, Lang::Pt];

    pub fn code(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Hi => "hi",
            Lang::Es => "es",
            Lang::Pt => "pt",
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported language code {0:?}")]
pub struct UnknownLang(pub String);

impl FromStr for Lang {
    type Err = UnknownLang;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "en" => Ok(Lang::En),
            "hi" => Ok(Lang::Hi),
            "es" => Ok(Lang::Es),
            "pt" => Ok(Lang::Pt),
            other => Err(UnknownLang(other.to_string())),
        }
    }
}

/// (tweet language, article language), written `hi-en`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LangPair {
    pub tweet: Lang,
    pub article: Lang,
}

impl LangPair {
    pub fn new(tweet: Lang, article: Lang) -> Self {
        Self { tweet, article }
    }

    pub fn is_cross_lingual(self) -> bool {
        self.tweet != self.article
    }
}

impl fmt::Display for LangPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.tweet, self.article)
    }
}

impl FromStr for LangPair {
    type Err = UnknownLang;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (t, a) = s.split_once('-').ok_or_else(|| UnknownLang(s.to_string()))?;
        Ok(Self::new(t.parse()?, a.parse()?))
    }
}

impl Serialize for LangPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LangPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub id: String,
    pub lang: Lang,
    pub text: String,
    pub link_preview: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub id: String,
    pub lang: Lang,
    pub title: Option<String>,
    pub body: Vec<String>,
}

impl Article {
    /// Paragraph list used for indexing: the title (when present and
    /// requested) followed by the body paragraphs.
    pub fn paragraphs(&self, include_title: bool) -> impl Iterator<Item = &str> {
        let title = self
            .title
            .as_deref()
            .filter(|t| include_title && !t.trim().is_empty());
        title.into_iter().chain(self.body.iter().map(String::as_str))
    }

    /// Whole-article text, paragraphs separated by a blank line.
    pub fn full_text(&self, include_title: bool) -> String {
        self.paragraphs(include_title)
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Match,
    NotMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    #[default]
    Ingested,
    MinedRandom,
    MinedHard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub tweet_id: String,
    pub article_id: String,
    pub label: Label,
    pub source: PairSource,
    /// Embedding similarity recorded by hard-negative mining.
    pub similarity: Option<f64>,
}

impl Pair {
    pub fn positive(tweet_id: impl Into<String>, article_id: impl Into<String>) -> Self {
        Self {
            tweet_id: tweet_id.into(),
            article_id: article_id.into(),
            label: Label::Match,
            source: PairSource::Ingested,
            similarity: None,
        }
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.tweet_id, &self.article_id)
    }
}

/// Text used to query for a tweet: the tweet followed by its link preview.
pub fn query_text(tweet: &Tweet) -> String {
    match tweet.link_preview.as_deref().map(str::trim) {
        None | Some("") => tweet.text.clone(),
        Some(preview) => format!("{} {}", tweet.text.trim_end(), preview),
    }
}

/// A validated, immutable collection of tweets, articles and positive pairs.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    tweets: Vec<Tweet>,
    articles: Vec<Article>,
    pairs: Vec<Pair>,
    tweet_index: HashMap<String, usize>,
    article_index: HashMap<String, usize>,
    partitions: BTreeMap<LangPair, Vec<usize>>,
}

/// Record plus the 1-based source line it came from (0 when built in memory).
pub(crate) struct Located<T> {
    pub line: usize,
    pub value: T,
}

impl Corpus {
    /// Builds a corpus from in-memory records, applying the same checks as
    /// JSONL ingestion.
    pub fn from_parts(
        tweets: Vec<Tweet>,
        articles: Vec<Article>,
        pairs: Vec<Pair>,
    ) -> Result<Self, CorpusError> {
        let at0 = |value| Located { line: 0, value };
        Self::assemble(
            tweets.into_iter().map(at0).collect(),
            articles.into_iter().map(|value| Located { line: 0, value }).collect(),
            pairs.into_iter().map(|value| Located { line: 0, value }).collect(),
        )
    }

    pub(crate) fn assemble(
        tweets: Vec<Located<Tweet>>,
        articles: Vec<Located<Article>>,
        pairs: Vec<Located<Pair>>,
    ) -> Result<Self, CorpusError> {
        let mut seen: HashMap<String, ()> = HashMap::new();
        let mut corpus = Corpus::default();

        for Located { line, value } in tweets {
            check_tweet(&value, line)?;
            if seen.insert(value.id.clone(), ()).is_some() {
                return Err(CorpusError::DuplicateId { line, id: value.id });
            }
            corpus.tweet_index.insert(value.id.clone(), corpus.tweets.len());
            corpus.tweets.push(value);
        }
        for Located { line, value } in articles {
            check_article(&value, line)?;
            if seen.insert(value.id.clone(), ()).is_some() {
                return Err(CorpusError::DuplicateId { line, id: value.id });
            }
            corpus.article_index.insert(value.id.clone(), corpus.articles.len());
            corpus.articles.push(value);
        }
        for Located { line, value } in pairs {
            if value.label != Label::Match || value.source != PairSource::Ingested {
                return Err(CorpusError::InvalidRecord {
                    line,
                    message: "corpus pairs must be ingested matches".into(),
                });
            }
            let tweet = corpus.tweet(&value.tweet_id).ok_or_else(|| {
                CorpusError::DanglingReference {
                    line,
                    kind: "tweet",
                    id: value.tweet_id.clone(),
                }
            })?;
            let article = corpus.article(&value.article_id).ok_or_else(|| {
                CorpusError::DanglingReference {
                    line,
                    kind: "article",
                    id: value.article_id.clone(),
                }
            })?;
            let lp = LangPair::new(tweet.lang, article.lang);
            corpus.partitions.entry(lp).or_default().push(corpus.pairs.len());
            corpus.pairs.push(value);
        }
        Ok(corpus)
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn tweet(&self, id: &str) -> Option<&Tweet> {
        self.tweet_index.get(id).map(|&i| &self.tweets[i])
    }

    pub fn article(&self, id: &str) -> Option<&Article> {
        self.article_index.get(id).map(|&i| &self.articles[i])
    }

    /// Language pairs that have at least one pair, in sorted order.
    pub fn partitions(&self) -> impl Iterator<Item = LangPair> + '_ {
        self.partitions.keys().copied()
    }

    pub fn partition_pairs(&self, lp: LangPair) -> impl Iterator<Item = &Pair> {
        self.partitions
            .get(&lp)
            .into_iter()
            .flatten()
            .map(|&i| &self.pairs[i])
    }

    /// Distinct tweets of a partition, sorted by id.
    pub fn partition_tweets(&self, lp: LangPair) -> Vec<&Tweet> {
        let ids: BTreeSet<&str> = self.partition_pairs(lp).map(|p| p.tweet_id.as_str()).collect();
        ids.into_iter().filter_map(|id| self.tweet(id)).collect()
    }

    /// Distinct articles of a partition, sorted by id.
    pub fn partition_articles(&self, lp: LangPair) -> Vec<&Article> {
        let ids: BTreeSet<&str> = self.partition_pairs(lp).map(|p| p.article_id.as_str()).collect();
        ids.into_iter().filter_map(|id| self.article(id)).collect()
    }

    /// Distinct positive (tweet_id, article_id) keys of a partition.
    pub fn positive_keys(&self, lp: LangPair) -> BTreeSet<(String, String)> {
        self.partition_pairs(lp)
            .map(|p| (p.tweet_id.clone(), p.article_id.clone()))
            .collect()
    }

    pub fn partition_of(&self, pair: &Pair) -> Option<LangPair> {
        Some(LangPair::new(
            self.tweet(&pair.tweet_id)?.lang,
            self.article(&pair.article_id)?.lang,
        ))
    }

    pub fn validate(&self) -> ValidationReport {
        validate_corpus(self)
    }
}

fn check_tweet(t: &Tweet, line: usize) -> Result<(), CorpusError> {
    if t.id.is_empty() {
        return Err(CorpusError::InvalidRecord {
            line,
            message: "tweet id is empty".into(),
        });
    }
    if t.text.trim().is_empty() {
        return Err(CorpusError::InvalidRecord {
            line,
            message: format!("tweet {:?} has empty text", t.id),
        });
    }
    Ok(())
}

fn check_article(a: &Article, line: usize) -> Result<(), CorpusError> {
    if a.id.is_empty() {
        return Err(CorpusError::InvalidRecord {
            line,
            message: "article id is empty".into(),
        });
    }
    if a.body.iter().all(|p| p.trim().is_empty()) {
        return Err(CorpusError::InvalidRecord {
            line,
            message: format!("article {:?} has no nonempty paragraph", a.id),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub partitions: BTreeMap<LangPair, usize>,
    pub total_pairs: usize,
    pub orphan_tweets: Vec<String>,
    pub orphan_articles: Vec<String>,
    pub duplicate_pairs: Vec<(String, String)>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.orphan_tweets.is_empty()
            && self.orphan_articles.is_empty()
            && self.duplicate_pairs.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pairs: {}", self.total_pairs)?;
        for (lp, n) in &self.partitions {
            writeln!(f, "  {lp:<8} {n}")?;
        }
        writeln!(f, "orphan tweets: {}", self.orphan_tweets.len())?;
        for id in &self.orphan_tweets {
            writeln!(f, "  {id}")?;
        }
        writeln!(f, "orphan articles: {}", self.orphan_articles.len())?;
        for id in &self.orphan_articles {
            writeln!(f, "  {id}")?;
        }
        writeln!(f, "duplicate pairs: {}", self.duplicate_pairs.len())?;
        for (t, a) in &self.duplicate_pairs {
            writeln!(f, "  {t} {a}")?;
        }
        Ok(())
    }
}

pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let mut report = ValidationReport {
        total_pairs: corpus.pairs.len(),
        ..Default::default()
    };
    for (lp, idx) in &corpus.partitions {
        report.partitions.insert(*lp, idx.len());
    }

    let mut seen = BTreeSet::new();
    let mut dupes = BTreeSet::new();
    for p in &corpus.pairs {
        if !seen.insert(p.key()) {
            dupes.insert((p.tweet_id.clone(), p.article_id.clone()));
        }
    }
    report.duplicate_pairs = dupes.into_iter().collect();

    let used_tweets: BTreeSet<&str> = corpus.pairs.iter().map(|p| p.tweet_id.as_str()).collect();
    let used_articles: BTreeSet<&str> = corpus.pairs.iter().map(|p| p.article_id.as_str()).collect();
    report.orphan_tweets = corpus
        .tweets
        .iter()
        .filter(|t| !used_tweets.contains(t.id.as_str()))
        .map(|t| t.id.clone())
        .collect();
    report.orphan_articles = corpus
        .articles
        .iter()
        .filter(|a| !used_articles.contains(a.id.as_str()))
        .map(|a| a.id.clone())
        .collect();
    report
}
