//! Second-stage re-ranking of retrieved candidates.
//!
//! Each candidate passes through the admission gate, admitted trials are
//! scored from their criterion labels, and the result is sorted by score,
//! then by first-stage score, then by trial id.

mod gate;
mod scoring;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use gate::{deontic_gate, GateDecision, GateMode, RejectReason, Relevance};
pub use scoring::{
    coarse_boost, contrast_score, count_labels, ee_score, filtered_ie_score, ge_score, ie_score, restricted_ie_score,
    score, wcontrast_score, CategoryCounting, FilterScope, LabelCounts, Score, ScoringMethod, UnknownMethod,
    DEFAULT_ALPHA, DEFAULT_BETA,
};

use crate::labeling::TrialJudgments;
use crate::retrieval::RankedList;

#[derive(Debug, thiserror::Error)]
pub enum RerankError {
    #[error("no judgments for candidate trial {0}")]
    MissingJudgments(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RerankConfig {
    pub method: ScoringMethod,
    pub gate: GateMode,
    pub counting: CategoryCounting,
}

/// Gate input and labels for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEvidence {
    pub relevance: Relevance,
    pub judgments: TrialJudgments,
}

/// What happened to one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_id: String,
    pub decision: GateDecision,
    pub score: Option<Score>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Reranking {
    pub ranked: RankedList,
    /// One per candidate, in candidate order.
    pub outcomes: Vec<TrialOutcome>,
}

impl Reranking {
    pub fn rejected(&self) -> impl Iterator<Item = &TrialOutcome> {
        self.outcomes.iter().filter(|o| !o.decision.is_admit())
    }
}

/// Gates and scores `cands`. The overlap method ranks by first-stage score
/// and needs no evidence; every other method needs evidence for every
/// candidate.
pub fn rerank(
    cands: &RankedList,
    evidence: &HashMap<String, CandidateEvidence>,
    cfg: &RerankConfig,
) -> Result<Reranking, RerankError> {
    let mut admitted = Vec::new();
    let mut outcomes = Vec::with_capacity(cands.len());
    for e in cands.entries() {
        let prior = e.score;
        let (decision, s) = if cfg.method.is_gated() {
            let ev = evidence.get(&e.trial_id).ok_or_else(|| RerankError::MissingJudgments(e.trial_id.clone()))?;
            let d = deontic_gate(ev.relevance, &ev.judgments, cfg.gate);
            let s = d.is_admit().then(|| {
                let counts = count_labels(&ev.judgments, cfg.counting);
                score(cfg.method, &counts, ev.judgments.coarse, prior)
            });
            (d, s)
        } else {
            (GateDecision::Admit, Some(Score { value: prior, empty_denominator: false }))
        };
        if let Some(s) = s {
            admitted.push((e, s.value));
        }
        outcomes.push(TrialOutcome { trial_id: e.trial_id.clone(), decision, score: s });
    }
    admitted.sort_by(|a, b| {
        b.1.total_cmp(&a.1).then_with(|| b.0.score.total_cmp(&a.0.score)).then_with(|| a.0.trial_id.cmp(&b.0.trial_id))
    });
    let ranked = RankedList::from_ordered(admitted.into_iter().map(|(e, s)| (e.trial_id.clone(), s, e.provenance)));
    Ok(Reranking { ranked, outcomes })
}
