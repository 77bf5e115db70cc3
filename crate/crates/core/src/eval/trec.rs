//! TREC-style run and qrels files.
//!
//! ```text
//! run:    query_id Q0 article_id rank score system_name
//! qrels:  query_id 0 article_id 1
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{EvalError, Qrels};
use crate::ranking::{RankedEntry, RankedList};

/// Writes rankings in the order given, ranks starting at 1.
pub fn write_run<'a>(
    lists: impl IntoIterator<Item = &'a RankedList>,
    system: &str,
    mut w: impl Write,
) -> std::io::Result<()> {
    for list in lists {
        for (i, e) in list.entries.iter().enumerate() {
            writeln!(w, "{} Q0 {} {} {} {}", list.query_id, e.article_id, i + 1, e.score, system)?;
        }
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> EvalError {
    EvalError::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a run file back into rankings keyed by query. Rows may appear in
/// any order; each query's rows are reordered by rank.
pub fn read_run(r: impl BufRead) -> Result<BTreeMap<String, RankedList>, EvalError> {
    let mut rows: BTreeMap<String, Vec<(usize, RankedEntry)>> = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if f.len() != 6 {
            return Err(parse_err(n, format!("expected 6 fields, found {}", f.len())));
        }
        let rank: usize = f[3].parse().map_err(|_| parse_err(n, format!("bad rank {:?}", f[3])))?;
        let score: f64 = f[4].parse().map_err(|_| parse_err(n, format!("bad score {:?}", f[4])))?;
        rows.entry(f[0].to_string()).or_default().push((
            rank,
            RankedEntry {
                article_id: f[2].to_string(),
                score,
            },
        ));
    }
    Ok(rows
        .into_iter()
        .map(|(q, mut entries)| {
            entries.sort_by_key(|(rank, _)| *rank);
            let list = RankedList {
                query_id: q.clone(),
                entries: entries.into_iter().map(|(_, e)| e).collect(),
            };
            (q, list)
        })
        .collect())
}

pub fn write_qrels(qrels: &Qrels, mut w: impl Write) -> std::io::Result<()> {
    for (q, rel) in qrels.iter() {
        for a in rel {
            writeln!(w, "{q} 0 {a} 1")?;
        }
    }
    Ok(())
}

/// Reads qrels; rows with relevance 0 are ignored.
pub fn read_qrels(r: impl BufRead) -> Result<Qrels, EvalError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if f.len() != 4 {
            return Err(parse_err(i + 1, format!("expected 4 fields, found {}", f.len())));
        }
        let rel: i64 = f[3]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad relevance {:?}", f[3])))?;
        if rel > 0 {
            pairs.push((f[0].to_string(), f[2].to_string()));
        }
    }
    Ok(Qrels::from_pairs(pairs.iter().map(|(q, a)| (q.as_str(), a.as_str()))))
}
