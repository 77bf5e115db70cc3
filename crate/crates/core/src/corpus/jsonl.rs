//! JSONL reading and writing for corpora and labeled pair datasets.
//!
//! ```text
//! {"kind":"tweet","id":"t1","lang":"en","text":"...","link_preview":"..."}
//! {"kind":"article","id":"a1","lang":"en","title":"...","body":["para1","para2"]}
//! {"kind":"pair","tweet_id":"t1","article_id":"a1","label":"match"}
//! ```

use std::io::{BufRead, Write};

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Article, Corpus, CorpusError, Label, Lang, Located, Pair, PairSource, Tweet};

const TWEET_FIELDS: &[&str] = &["kind", "id", "lang", "text", "link_preview"];
const ARTICLE_FIELDS: &[&str] = &["kind", "id", "lang", "title", "body"];
const PAIR_FIELDS: &[&str] = &["kind", "tweet_id", "article_id", "label", "source", "similarity"];

#[derive(Deserialize)]
struct RawTweet {
    id: String,
    lang: String,
    text: String,
    #[serde(default)]
    link_preview: Option<String>,
}

#[derive(Deserialize)]
struct RawArticle {
    id: String,
    lang: String,
    #[serde(default)]
    title: Option<String>,
    body: Vec<String>,
}

fn default_label() -> Label {
    Label::Match
}

#[derive(Deserialize)]
struct RawPair {
    tweet_id: String,
    article_id: String,
    #[serde(default = "default_label")]
    label: Label,
    #[serde(default)]
    source: PairSource,
    #[serde(default)]
    similarity: Option<f64>,
}

enum Record {
    Tweet(Tweet),
    Article(Article),
    Pair(Pair),
}

/// Reads non-blank lines as UTF-8, yielding `(line_number, text)`.
fn for_each_line(
    mut reader: impl BufRead,
    mut f: impl FnMut(usize, &str) -> Result<(), CorpusError>,
) -> Result<(), CorpusError> {
    let mut buf = Vec::new();
    let mut line = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        line += 1;
        let text = std::str::from_utf8(&buf).map_err(|e| CorpusError::MalformedJson {
            line,
            message: format!("invalid UTF-8: {e}"),
        })?;
        if line == 1 && text.starts_with('\u{feff}') {
            return Err(CorpusError::MalformedJson {
                line,
                message: "byte-order mark is not allowed".into(),
            });
        }
        let text = text.trim();
        if !text.is_empty() {
            f(line, text)?;
        }
    }
}

fn parse_lang(code: &str, line: usize) -> Result<Lang, CorpusError> {
    code.parse().map_err(|_| CorpusError::UnsupportedLanguage {
        line,
        code: code.to_string(),
    })
}

fn typed<T: for<'de> Deserialize<'de>>(
    obj: Map<String, Value>,
    kind: &str,
    known: &[&str],
    line: usize,
) -> Result<T, CorpusError> {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            warn!("line {line}: ignoring unknown {kind} field {key:?}");
        }
    }
    serde_json::from_value(Value::Object(obj)).map_err(|e| CorpusError::InvalidRecord {
        line,
        message: format!("{kind}: {e}"),
    })
}

fn parse_record(text: &str, line: usize) -> Result<Record, CorpusError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CorpusError::MalformedJson {
        line,
        message: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(CorpusError::MalformedJson {
            line,
            message: "record is not a JSON object".into(),
        });
    };
    let kind = match obj.get("kind") {
        Some(Value::String(k)) => k.clone(),
        Some(other) => {
            return Err(CorpusError::UnsupportedKind {
                line,
                kind: other.to_string(),
            })
        }
        None => {
            return Err(CorpusError::InvalidRecord {
                line,
                message: "missing \"kind\"".into(),
            })
        }
    };
    match kind.as_str() {
        "tweet" => {
            let raw: RawTweet = typed(obj, "tweet", TWEET_FIELDS, line)?;
            Ok(Record::Tweet(Tweet {
                lang: parse_lang(&raw.lang, line)?,
                id: raw.id,
                text: raw.text,
                link_preview: raw.link_preview,
            }))
        }
        "article" => {
            let raw: RawArticle = typed(obj, "article", ARTICLE_FIELDS, line)?;
            Ok(Record::Article(Article {
                lang: parse_lang(&raw.lang, line)?,
                id: raw.id,
                title: raw.title,
                body: raw.body,
            }))
        }
        "pair" => {
            let raw: RawPair = typed(obj, "pair", PAIR_FIELDS, line)?;
            Ok(Record::Pair(Pair {
                tweet_id: raw.tweet_id,
                article_id: raw.article_id,
                label: raw.label,
                source: raw.source,
                similarity: raw.similarity,
            }))
        }
        _ => Err(CorpusError::UnsupportedKind { line, kind }),
    }
}

/// Parses a JSONL corpus. Pairs may appear before the records they reference.
pub fn ingest_corpus(reader: impl BufRead) -> Result<Corpus, CorpusError> {
    let mut tweets = Vec::new();
    let mut articles = Vec::new();
    let mut pairs = Vec::new();
    for_each_line(reader, |line, text| {
        match parse_record(text, line)? {
            Record::Tweet(value) => tweets.push(Located { line, value }),
            Record::Article(value) => articles.push(Located { line, value }),
            Record::Pair(value) => {
                if value.label != Label::Match {
                    return Err(CorpusError::InvalidRecord {
                        line,
                        message: "ingested pairs must carry label \"match\"".into(),
                    });
                }
                if value.source != PairSource::Ingested {
                    return Err(CorpusError::InvalidRecord {
                        line,
                        message: "mined pairs cannot be ingested as corpus pairs".into(),
                    });
                }
                pairs.push(Located { line, value })
            }
        }
        Ok(())
    })?;
    Corpus::assemble(tweets, articles, pairs)
}

/// Reads a labeled pair dataset (pair records only, any label or source).
pub fn read_dataset(reader: impl BufRead) -> Result<Vec<Pair>, CorpusError> {
    let mut pairs = Vec::new();
    for_each_line(reader, |line, text| match parse_record(text, line)? {
        Record::Pair(p) => {
            pairs.push(p);
            Ok(())
        }
        _ => Err(CorpusError::InvalidRecord {
            line,
            message: "dataset files contain pair records only".into(),
        }),
    })?;
    Ok(pairs)
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum OutRecord<'a> {
    Tweet {
        id: &'a str,
        lang: Lang,
        text: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        link_preview: Option<&'a str>,
    },
    Article {
        id: &'a str,
        lang: Lang,
        #[serde(skip_serializing_if = "Option::is_none")]
        title: Option<&'a str>,
        body: &'a [String],
    },
    Pair {
        tweet_id: &'a str,
        article_id: &'a str,
        label: Label,
        #[serde(skip_serializing_if = "is_ingested")]
        source: PairSource,
        #[serde(skip_serializing_if = "Option::is_none")]
        similarity: Option<f64>,
    },
}

fn is_ingested(s: &PairSource) -> bool {
    *s == PairSource::Ingested
}

fn pair_record(p: &Pair) -> OutRecord<'_> {
    OutRecord::Pair {
        tweet_id: &p.tweet_id,
        article_id: &p.article_id,
        label: p.label,
        source: p.source,
        similarity: p.similarity,
    }
}

fn write_record(w: &mut impl Write, rec: &OutRecord<'_>) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, rec)?;
    w.write_all(b"\n")
}

pub fn write_pairs_jsonl<'a>(
    pairs: impl IntoIterator<Item = &'a Pair>,
    mut w: impl Write,
) -> std::io::Result<()> {
    for p in pairs {
        write_record(&mut w, &pair_record(p))?;
    }
    Ok(())
}

impl Corpus {
    /// Writes tweets, then articles, then pairs, each in ingestion order.
    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for t in self.tweets() {
            write_record(
                &mut w,
                &OutRecord::Tweet {
                    id: &t.id,
                    lang: t.lang,
                    text: &t.text,
                    link_preview: t.link_preview.as_deref(),
                },
            )?;
        }
        for a in self.articles() {
            write_record(
                &mut w,
                &OutRecord::Article {
                    id: &a.id,
                    lang: a.lang,
                    title: a.title.as_deref(),
                    body: &a.body,
                },
            )?;
        }
        write_pairs_jsonl(self.pairs(), w)
    }
}
