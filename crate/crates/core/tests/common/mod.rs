//! Synthetic corpora and brute-force reference implementations shared by
//! the integration and acceptance tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use claimmatch::corpus::{Article, Corpus, Lang, Pair, Tweet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const LATIN: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
const CONSONANTS: &[char] = &[
    'क', 'ख', 'ग', 'घ', 'च', 'छ', 'ज', 'झ', 'ट', 'ठ', 'ड', 'ढ', 'त', 'थ', 'द', 'ध', 'न', 'प', 'फ', 'ब',
    'भ', 'म', 'य', 'र', 'ल', 'व', 'श', 'स', 'ह',
];
const MATRAS: &[char] = &['ा', 'ि', 'ी', 'ु', 'ू', 'े', 'ै', 'ो', 'ौ', 'ं'];

/// Draws words from `make` until one not in `used` appears.
fn fresh(used: &mut HashSet<String>, mut make: impl FnMut() -> String) -> String {
    loop {
        let w = make();
        if used.insert(w.clone()) {
            return w;
        }
    }
}

pub fn latin_word(r: &mut ChaCha8Rng, len: std::ops::RangeInclusive<usize>) -> String {
    let n = r.gen_range(len);
    (0..n).map(|_| LATIN[r.gen_range(0..LATIN.len())] as char).collect()
}

pub fn hindi_word(r: &mut ChaCha8Rng) -> String {
    let syllables = r.gen_range(2..=4);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(*CONSONANTS.choose(r).unwrap());
        if r.gen_bool(0.7) {
            w.push(*MATRAS.choose(r).unwrap());
        }
    }
    w
}

/// Vocabulary for one synthetic corpus: shared filler words plus a set of
/// distinctive terms per article.
pub struct Plan {
    pub filler: Vec<String>,
    pub planted: Vec<Vec<String>>,
}

pub fn plan(r: &mut ChaCha8Rng, n_articles: usize, planted_per_article: usize, n_filler: usize) -> Plan {
    let mut used = HashSet::new();
    let filler = (0..n_filler).map(|_| fresh(&mut used, || latin_word(r, 3..=7))).collect();
    let planted = (0..n_articles)
        .map(|_| {
            (0..planted_per_article)
                .map(|_| fresh(&mut used, || latin_word(r, 7..=10)))
                .collect()
        })
        .collect();
    Plan { filler, planted }
}

fn filler_text(r: &mut ChaCha8Rng, filler: &[String], n: usize) -> Vec<String> {
    (0..n).map(|_| filler.choose(r).unwrap().clone()).collect()
}

/// English article whose first body paragraph carries all planted terms.
pub fn planted_article(r: &mut ChaCha8Rng, id: String, filler: &[String], planted: &[String]) -> Article {
    let mut first = filler_text(r, filler, 25);
    for t in planted {
        let at = r.gen_range(0..=first.len());
        first.insert(at, t.clone());
    }
    let mut body = vec![first.join(" ") + "."];
    for _ in 0..2 {
        let n = r.gen_range(20..40);
        body.push(filler_text(r, filler, n).join(" ") + ".");
    }
    Article {
        id,
        lang: Lang::En,
        title: Some(filler_text(r, filler, 4).join(" ")),
        body,
    }
}

fn tweet_words(r: &mut ChaCha8Rng, planted: &[String], keep: usize, filler: &[String], n_filler: usize) -> String {
    let mut words: Vec<String> = planted.choose_multiple(r, keep).cloned().collect();
    words.extend(filler_text(r, filler, n_filler));
    words.shuffle(r);
    words.join(" ")
}

/// Monolingual en-en corpus: each tweet copies `keep` of its article's
/// planted terms plus a few filler words.
pub fn planted_corpus(n_articles: usize, tweets_per_article: usize, keep: usize, seed: u64) -> Corpus {
    let mut r = rng(seed);
    let p = plan(&mut r, n_articles, 6, 300);
    let mut tweets = Vec::new();
    let mut articles = Vec::new();
    let mut pairs = Vec::new();
    for (i, planted) in p.planted.iter().enumerate() {
        let aid = format!("a{i:03}");
        articles.push(planted_article(&mut r, aid.clone(), &p.filler, planted));
        for j in 0..tweets_per_article {
            let tid = format!("t{i:03}_{j}");
            tweets.push(Tweet {
                id: tid.clone(),
                lang: Lang::En,
                text: tweet_words(&mut r, planted, keep, &p.filler, 5),
                link_preview: None,
            });
            pairs.push(Pair::positive(tid, aid.clone()));
        }
    }
    Corpus::from_parts(tweets, articles, pairs).expect("synthetic corpus is valid")
}

/// hi-en corpus: Hindi tweets built from Hindi stand-ins for the article's
/// planted English terms. Returns the corpus and the Hindi → English table
/// that restores the overlap.
pub fn cross_lingual_corpus(
    n_articles: usize,
    tweets_per_article: usize,
    seed: u64,
) -> (Corpus, Vec<(String, String)>) {
    let mut r = rng(seed);
    let p = plan(&mut r, n_articles, 6, 300);
    let mut used = HashSet::new();
    let hindi_filler: Vec<String> = (0..200).map(|_| fresh(&mut used, || hindi_word(&mut r))).collect();
    let mut dictionary = Vec::new();
    let mut tweets = Vec::new();
    let mut articles = Vec::new();
    let mut pairs = Vec::new();
    for (i, planted) in p.planted.iter().enumerate() {
        let aid = format!("e{i:03}");
        articles.push(planted_article(&mut r, aid.clone(), &p.filler, planted));
        let hindi: Vec<String> = planted.iter().map(|_| fresh(&mut used, || hindi_word(&mut r))).collect();
        dictionary.extend(hindi.iter().cloned().zip(planted.iter().cloned()));
        for j in 0..tweets_per_article {
            let tid = format!("h{i:03}_{j}");
            tweets.push(Tweet {
                id: tid.clone(),
                lang: Lang::Hi,
                text: tweet_words(&mut r, &hindi, 4, &hindi_filler, 5),
                link_preview: None,
            });
            pairs.push(Pair::positive(tid, aid.clone()));
        }
    }
    let corpus = Corpus::from_parts(tweets, articles, pairs).expect("synthetic corpus is valid");
    (corpus, dictionary)
}

/// en-en corpus where each article draws from its own private vocabulary
/// and its tweets reuse that vocabulary, so positives are textually close
/// and negatives share almost nothing.
pub fn separable_corpus(n_articles: usize, tweets_per_article: usize, seed: u64) -> Corpus {
    let mut r = rng(seed);
    let p = plan(&mut r, n_articles, 12, 0);
    let mut tweets = Vec::new();
    let mut articles = Vec::new();
    let mut pairs = Vec::new();
    for (i, vocab) in p.planted.iter().enumerate() {
        let aid = format!("s{i:03}");
        let body = (0..3)
            .map(|_| {
                let n = r.gen_range(15..30);
                filler_text(&mut r, vocab, n).join(" ") + "."
            })
            .collect();
        articles.push(Article {
            id: aid.clone(),
            lang: Lang::En,
            title: Some(filler_text(&mut r, vocab, 4).join(" ")),
            body,
        });
        for j in 0..tweets_per_article {
            let tid = format!("u{i:03}_{j}");
            tweets.push(Tweet {
                id: tid.clone(),
                lang: Lang::En,
                text: filler_text(&mut r, vocab, 10).join(" "),
                link_preview: None,
            });
            pairs.push(Pair::positive(tid, aid.clone()));
        }
    }
    Corpus::from_parts(tweets, articles, pairs).expect("synthetic corpus is valid")
}

/// Union of corpora with disjoint ids.
pub fn merge(parts: &[&Corpus]) -> Corpus {
    Corpus::from_parts(
        parts.iter().flat_map(|c| c.tweets().iter().cloned()).collect(),
        parts.iter().flat_map(|c| c.articles().iter().cloned()).collect(),
        parts.iter().flat_map(|c| c.pairs().iter().cloned()).collect(),
    )
    .expect("ids are disjoint")
}

/// Serializes `corpus` to JSONL at `path`.
pub fn write_corpus(corpus: &Corpus, path: &std::path::Path) {
    let mut f = std::fs::File::create(path).unwrap();
    corpus.write_jsonl(&mut f).unwrap();
}

// ---------------------------------------------------------------------------
// Reference BM25
// ---------------------------------------------------------------------------

/// Scores every document containing at least one query term by direct
/// evaluation of the Lucene BM25 formula; sorted by score descending, then id.
pub fn brute_bm25(
    docs: &[(String, Vec<String>)],
    query: &[String],
    k1: f64,
    b: f64,
) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|(_, t)| t.len()).sum::<usize>() as f64 / n;
    let mut distinct: Vec<&String> = Vec::new();
    for t in query {
        if !distinct.contains(&t) {
            distinct.push(t);
        }
    }
    let mut out = Vec::new();
    for (id, toks) in docs {
        let dl = toks.len() as f64;
        let mut s = 0.0;
        let mut hit = false;
        for t in &distinct {
            let tf = toks.iter().filter(|x| x == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            hit = true;
            let df = docs.iter().filter(|(_, d)| d.contains(t)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        if hit {
            out.push((id.clone(), s));
        }
    }
    out.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    out
}

// ---------------------------------------------------------------------------
// Reference retrieval metrics
// ---------------------------------------------------------------------------

pub fn brute_ap(ranking: &[String], relevant: &BTreeSet<String>, k: usize) -> f64 {
    let top: Vec<&String> = ranking.iter().take(k).collect();
    let mut total = 0.0;
    for i in 0..top.len() {
        if relevant.contains(top[i]) {
            let hits = top[..=i].iter().filter(|a| relevant.contains(**a)).count();
            total += hits as f64 / (i + 1) as f64;
        }
    }
    total / relevant.len().min(k) as f64
}

pub fn brute_rr(ranking: &[String], relevant: &BTreeSet<String>) -> f64 {
    for (i, a) in ranking.iter().enumerate() {
        if relevant.contains(a) {
            return 1.0 / (i + 1) as f64;
        }
    }
    0.0
}

/// (MAP@K per K, MRR) averaged over every qrels query.
pub fn brute_metrics(
    run: &BTreeMap<String, Vec<String>>,
    qrels: &BTreeMap<String, BTreeSet<String>>,
    ks: &[usize],
) -> (Vec<f64>, f64) {
    let empty = Vec::new();
    let n = qrels.len() as f64;
    let maps = ks
        .iter()
        .map(|&k| {
            qrels
                .iter()
                .map(|(q, rel)| brute_ap(run.get(q).unwrap_or(&empty), rel, k))
                .sum::<f64>()
                / n
        })
        .collect();
    let mrr = qrels
        .iter()
        .map(|(q, rel)| brute_rr(run.get(q).unwrap_or(&empty), rel))
        .sum::<f64>()
        / n;
    (maps, mrr)
}

// ---------------------------------------------------------------------------
// Reference hard-negative selection
// ---------------------------------------------------------------------------

/// Every non-positive pair with similarity below `ceiling`, most similar
/// first (ties by tweet id, then article id), cut to `count`.
pub fn brute_hard_negatives(
    sims: &BTreeMap<(String, String), f64>,
    positives: &BTreeSet<(String, String)>,
    ceiling: f64,
    count: usize,
) -> Vec<(String, String, f64)> {
    let mut c: Vec<(String, String, f64)> = sims
        .iter()
        .filter(|(k, &s)| !positives.contains(*k) && s < ceiling)
        .map(|((t, a), &s)| (t.clone(), a.clone(), s))
        .collect();
    c.sort_by(|x, y| {
        y.2.partial_cmp(&x.2)
            .unwrap()
            .then_with(|| x.0.cmp(&y.0))
            .then_with(|| x.1.cmp(&y.1))
    });
    c.truncate(count);
    c
}
