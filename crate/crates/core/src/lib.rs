//! Fact-check retrieval and (tweet, fact-check) claim matching.
//!
//! The crate covers the whole experimental loop: ingesting a multilingual
//! corpus of tweets and fact-check articles, BM25 and embedding retrieval,
//! negative mining for match/not-match datasets, and MAP@K / MRR / F1
//! evaluation. Embedding models and machine translation sit behind the
//! provider traits in [`providers`].

pub mod bm25;
pub mod corpus;
pub mod dense;
pub mod eval;
pub mod mining;
pub mod pipeline;
pub mod providers;
pub mod ranking;
pub mod textproc;
