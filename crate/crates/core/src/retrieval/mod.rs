//! First-stage candidate generation.
//!
//! Condition relevance ranks trials by the overlap coefficient between a
//! patient's expanded diagnoses and a trial's normalized conditions. BM25
//! over raw trial text is the lexical baseline. The demographic filter and
//! backfill shape the candidate list handed to re-ranking.

mod bm25;
mod condition;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use bm25::{Bm25Params, TextIndex};
pub use condition::{condition_relevance, overlap, overlap_coefficient, retrieve_by_condition, ConditionIndex};

use crate::model::{age_intersect, gender_match, PatientProfile, TrialRecord};

/// Where a ranked entry came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ConditionRelevance,
    /// Lexical (BM25) first stage.
    TextMatch,
    Backfill,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub trial_id: String,
    pub score: f64,
    pub rank: usize,
    pub provenance: Provenance,
}

/// Ranked trials; ranks are contiguous from 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sorts by score descending, ties by trial id ascending.
    pub fn from_scores(mut scored: Vec<(String, f64)>, provenance: Provenance) -> Self {
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_ordered(scored.into_iter().map(|(id, s)| (id, s, provenance)))
    }

    /// Keeps the given order and assigns ranks.
    pub fn from_ordered(items: impl IntoIterator<Item = (String, f64, Provenance)>) -> Self {
        let entries = items
            .into_iter()
            .enumerate()
            .map(|(i, (trial_id, score, provenance))| RankedEntry { trial_id, score, rank: i + 1, provenance })
            .collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<RankedEntry> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.trial_id.as_str())
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    pub fn push(&mut self, trial_id: String, score: f64, provenance: Provenance) {
        let rank = self.entries.len() + 1;
        self.entries.push(RankedEntry { trial_id, score, rank, provenance });
    }

    /// Keeps matching entries in order and renumbers ranks.
    pub fn retain(&mut self, mut keep: impl FnMut(&RankedEntry) -> bool) {
        self.entries.retain(|e| keep(e));
        for (i, e) in self.entries.iter_mut().enumerate() {
            e.rank = i + 1;
        }
    }
}

/// Age sets intersect and genders match.
pub fn passes_demographics(p: &PatientProfile, r: &TrialRecord) -> bool {
    !age_intersect(&p.age, &r.age).is_empty() && gender_match(&p.gender, &r.gender)
}

/// Drops candidates whose trial fails the demographic predicate or is unknown.
pub fn demographic_filter(
    cands: &RankedList,
    p: &PatientProfile,
    trials: &HashMap<String, TrialRecord>,
) -> RankedList {
    let mut out = cands.clone();
    out.retain(|e| trials.get(&e.trial_id).is_some_and(|r| passes_demographics(p, r)));
    out
}

/// Truncates `filtered` to `k`, or pads it with demographically compatible
/// trials from `full_ranking` that it does not already hold. Padding entries
/// keep their scores and are marked [`Provenance::Backfill`].
pub fn backfill_to_k(
    filtered: &RankedList,
    full_ranking: &RankedList,
    p: &PatientProfile,
    trials: &HashMap<String, TrialRecord>,
    k: usize,
) -> RankedList {
    let mut out = filtered.clone();
    if out.len() >= k {
        out.truncate(k);
        return out;
    }
    let have: HashSet<&str> = filtered.ids().collect();
    for e in full_ranking.entries() {
        if out.len() >= k {
            break;
        }
        if have.contains(e.trial_id.as_str()) {
            continue;
        }
        if trials.get(&e.trial_id).is_some_and(|r| passes_demographics(p, r)) {
            out.push(e.trial_id.clone(), e.score, Provenance::Backfill);
        }
    }
    out
}
