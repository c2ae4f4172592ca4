//! Condition-relevance retrieval by overlap coefficient.

use std::collections::{BTreeMap, HashMap};

use super::{Provenance, RankedList};
use crate::model::{ConceptId, ConceptSet, PatientProfile, TrialRecord};

/// Concepts shared by the patient's expanded diagnoses and the trial's
/// normalized conditions.
pub fn condition_relevance(p: &PatientProfile, r: &TrialRecord) -> ConceptSet {
    p.diagnosis_expanded.intersection(&r.condition_norm)
}

/// `|a ∩ b| / min(|a|, |b|)`, or 0 when either set is empty.
pub fn overlap(a: &ConceptSet, b: &ConceptSet) -> f64 {
    let m = a.len().min(b.len());
    if m == 0 {
        return 0.0;
    }
    a.intersection(b).len() as f64 / m as f64
}

pub fn overlap_coefficient(p: &PatientProfile, r: &TrialRecord) -> f64 {
    overlap(&p.diagnosis_expanded, &r.condition_norm)
}

/// Inverted index from concept to the trials listing it as a condition.
#[derive(Debug, Clone, Default)]
pub struct ConditionIndex {
    ids: Vec<String>,
    sizes: Vec<usize>,
    postings: BTreeMap<ConceptId, Vec<u32>>,
}

impl ConditionIndex {
    pub fn build<'a>(trials: impl IntoIterator<Item = &'a TrialRecord>) -> Self {
        let mut docs: Vec<(&str, &ConceptSet)> =
            trials.into_iter().map(|t| (t.id.as_str(), &t.condition_norm)).collect();
        docs.sort_by(|a, b| a.0.cmp(b.0));
        docs.dedup_by(|a, b| a.0 == b.0);
        let mut postings: BTreeMap<ConceptId, Vec<u32>> = BTreeMap::new();
        for (i, (_, conds)) in docs.iter().enumerate() {
            for c in conds.iter() {
                postings.entry(c.clone()).or_default().push(i as u32);
            }
        }
        Self {
            ids: docs.iter().map(|d| d.0.to_string()).collect(),
            sizes: docs.iter().map(|d| d.1.len()).collect(),
            postings,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Trials listing `concept`, ascending by trial id.
    pub fn posting(&self, concept: &ConceptId) -> impl Iterator<Item = &str> {
        self.postings.get(concept).into_iter().flatten().map(|&i| self.ids[i as usize].as_str())
    }

    /// Number of normalized conditions of `trial_id`.
    pub fn condition_count(&self, trial_id: &str) -> Option<usize> {
        self.ids.binary_search_by(|x| x.as_str().cmp(trial_id)).ok().map(|i| self.sizes[i])
    }

    /// Every trial sharing at least one concept with `expanded`, ranked by
    /// overlap coefficient (ties by trial id).
    pub fn rank_all(&self, expanded: &ConceptSet) -> RankedList {
        let mut hits: HashMap<u32, usize> = HashMap::new();
        for c in expanded.iter() {
            if let Some(ps) = self.postings.get(c) {
                for &d in ps {
                    *hits.entry(d).or_default() += 1;
                }
            }
        }
        let scored = hits
            .into_iter()
            .map(|(d, n)| {
                let m = expanded.len().min(self.sizes[d as usize]);
                (self.ids[d as usize].clone(), n as f64 / m as f64)
            })
            .collect();
        RankedList::from_scores(scored, Provenance::ConditionRelevance)
    }

    /// Top `k` of [`ConditionIndex::rank_all`].
    pub fn retrieve(&self, expanded: &ConceptSet, k: usize) -> RankedList {
        let mut out = self.rank_all(expanded);
        out.truncate(k);
        out
    }
}

/// Top-`k` condition-relevant trials for a profile.
pub fn retrieve_by_condition(p: &PatientProfile, idx: &ConditionIndex, k: usize) -> RankedList {
    idx.retrieve(&p.diagnosis_expanded, k)
}
