//! MinHash LSH index over ontology labels and synonyms.
//!
//! Each name is shingled, summarized by a MinHash signature, and the signature
//! is cut into bands. Two names collide when any band hashes identically; the
//! collision probability for Jaccard similarity `s` is `1 - (1 - s^rows)^bands`.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::similarity::{jaccard, Shingling};
use super::{OntologyError, OntologyGraph};
use crate::model::ConceptId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LshParams {
    pub num_perm: usize,
    pub bands: usize,
    pub rows: usize,
    pub shingling: Shingling,
    pub seed: u64,
}

impl Default for LshParams {
    fn default() -> Self {
        Self { num_perm: 128, bands: 32, rows: 4, shingling: Shingling::Tokens, seed: 0x5eed }
    }
}

impl LshParams {
    pub fn validate(&self) -> Result<(), OntologyError> {
        if self.bands == 0 || self.rows == 0 || self.bands * self.rows != self.num_perm {
            return Err(OntologyError::InvalidParams(format!(
                "bands ({}) x rows ({}) must equal num_perm ({})",
                self.bands, self.rows, self.num_perm
            )));
        }
        Ok(())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
struct Entry {
    concept: ConceptId,
    shingles: BTreeSet<String>,
}

/// Approximate nearest-neighbour index; immutable after [`NnIndex::build`].
#[derive(Debug, Clone)]
pub struct NnIndex {
    params: LshParams,
    seeds: Vec<u64>,
    entries: Vec<Entry>,
    buckets: Vec<HashMap<u64, Vec<u32>>>,
}

impl NnIndex {
    pub fn build(graph: &OntologyGraph, params: LshParams) -> Result<Self, OntologyError> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let seeds: Vec<u64> = (0..params.num_perm).map(|_| rng.random()).collect();

        let mut entries = Vec::new();
        for c in graph.concepts() {
            let mut seen: Vec<BTreeSet<String>> = Vec::new();
            for name in c.names() {
                let sh = params.shingling.shingles(name);
                if sh.is_empty() || seen.contains(&sh) {
                    continue;
                }
                seen.push(sh.clone());
                entries.push(Entry { concept: c.id.clone(), shingles: sh });
            }
        }

        let mut index = Self { params, seeds, entries, buckets: vec![HashMap::new(); params.bands] };
        let band_keys: Vec<Vec<u64>> =
            index.entries.par_iter().map(|e| index.band_keys(&index.signature(&e.shingles))).collect();
        for (i, keys) in band_keys.into_iter().enumerate() {
            for (band, key) in keys.into_iter().enumerate() {
                index.buckets[band].entry(key).or_default().push(i as u32);
            }
        }
        Ok(index)
    }

    pub fn params(&self) -> &LshParams {
        &self.params
    }

    /// Number of indexed (concept, name) entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn signature(&self, shingles: &BTreeSet<String>) -> Vec<u64> {
        let base: Vec<u64> = shingles.iter().map(|s| fnv1a(s.as_bytes())).collect();
        self.seeds
            .iter()
            .map(|&seed| base.iter().map(|&h| mix64(h ^ seed)).min().unwrap_or(u64::MAX))
            .collect()
    }

    fn band_keys(&self, sig: &[u64]) -> Vec<u64> {
        sig.chunks(self.params.rows)
            .map(|rows| {
                let mut bytes = Vec::with_capacity(rows.len() * 8);
                for r in rows {
                    bytes.extend_from_slice(&r.to_le_bytes());
                }
                fnv1a(&bytes)
            })
            .collect()
    }

    /// Best concept among bucket collisions, scored by exact Jaccard.
    /// Ties resolve to the smallest concept id. `None` when nothing collides.
    pub fn query(&self, phrase: &str) -> Option<(ConceptId, f64)> {
        let shingles = self.params.shingling.shingles(phrase);
        if shingles.is_empty() {
            return None;
        }
        let keys = self.band_keys(&self.signature(&shingles));
        let mut candidates: BTreeSet<u32> = BTreeSet::new();
        for (band, key) in keys.iter().enumerate() {
            if let Some(ids) = self.buckets[band].get(key) {
                candidates.extend(ids.iter().copied());
            }
        }
        let mut best: Option<(ConceptId, f64)> = None;
        for i in candidates {
            let e = &self.entries[i as usize];
            let s = jaccard(&shingles, &e.shingles);
            let better = match &best {
                None => true,
                Some((id, bs)) => s > *bs || (s == *bs && e.concept < *id),
            };
            if better {
                best = Some((e.concept.clone(), s));
            }
        }
        best
    }
}
