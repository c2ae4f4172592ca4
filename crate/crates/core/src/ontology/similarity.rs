//! Jaccard similarity over shingle sets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::text::tokens;

/// How a phrase is broken into shingles before comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shingling {
    /// Word unigrams.
    #[default]
    Tokens,
    /// Character k-grams over the space-joined token sequence.
    Chars { k: usize },
}

impl Shingling {
    pub fn shingles(&self, phrase: &str) -> BTreeSet<String> {
        let toks = tokens(phrase);
        match *self {
            Shingling::Tokens => toks.into_iter().collect(),
            Shingling::Chars { k } => {
                let joined: Vec<char> = toks.join(" ").chars().collect();
                if joined.is_empty() {
                    return BTreeSet::new();
                }
                let k = k.max(1);
                if joined.len() <= k {
                    return BTreeSet::from([joined.into_iter().collect()]);
                }
                joined.windows(k).map(|w| w.iter().collect()).collect()
            }
        }
    }
}

/// |A ∩ B| / |A ∪ B|; defined as 0 when both sets are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Token-unigram Jaccard similarity between two phrases.
pub fn phrase_similarity(a: &str, b: &str) -> f64 {
    phrase_similarity_with(a, b, Shingling::Tokens)
}

pub fn phrase_similarity_with(a: &str, b: &str, shingling: Shingling) -> f64 {
    jaccard(&shingling.shingles(a), &shingling.shingles(b))
}
