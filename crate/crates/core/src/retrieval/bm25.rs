//! BM25 over raw trial text.
//!
//! Tokens are lowercase alphanumeric runs with no stemming. Document
//! frequency uses `idf = ln(1 + (N - df + 0.5) / (df + 0.5))`, which is
//! positive for every df, and each distinct query token counts once.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{Provenance, RankedList};
use crate::text::tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TextIndex {
    params: Bm25Params,
    ids: Vec<String>,
    lengths: Vec<u32>,
    avg_len: f64,
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl TextIndex {
    pub fn build<'a>(docs: impl IntoIterator<Item = (&'a str, &'a str)>, params: Bm25Params) -> Self {
        let mut docs: Vec<(&str, &str)> = docs.into_iter().collect();
        docs.sort_by(|a, b| a.0.cmp(b.0));
        docs.dedup_by(|a, b| a.0 == b.0);
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut lengths = Vec::with_capacity(docs.len());
        for (i, (_, text)) in docs.iter().enumerate() {
            let toks = tokens(text);
            lengths.push(toks.len() as u32);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in toks {
                *tf.entry(t).or_default() += 1;
            }
            for (t, n) in tf {
                postings.entry(t).or_default().push((i as u32, n));
            }
        }
        let total: u64 = lengths.iter().map(|&l| l as u64).sum();
        let avg_len = if lengths.is_empty() { 0.0 } else { total as f64 / lengths.len() as f64 };
        Self { params, ids: docs.iter().map(|d| d.0.to_string()).collect(), lengths, avg_len, postings }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.ids.len() as f64;
        let df = self.postings.get(term).map_or(0, Vec::len) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Scores every document containing a query token.
    pub fn scores(&self, query: &str) -> Vec<(String, f64)> {
        let Bm25Params { k1, b } = self.params;
        let terms: BTreeSet<String> = tokens(query).into_iter().collect();
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for t in &terms {
            let Some(ps) = self.postings.get(t) else { continue };
            let idf = self.idf(t);
            for &(d, tf) in ps {
                let tf = tf as f64;
                let norm = if self.avg_len > 0.0 { self.lengths[d as usize] as f64 / self.avg_len } else { 0.0 };
                *acc.entry(d).or_default() += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
            }
        }
        acc.into_iter().map(|(d, s)| (self.ids[d as usize].clone(), s)).collect()
    }

    /// Top `k` documents by BM25 score, ties by id.
    pub fn retrieve(&self, query: &str, k: usize) -> RankedList {
        let mut out = RankedList::from_scores(self.scores(query), Provenance::TextMatch);
        out.truncate(k);
        out
    }
}
