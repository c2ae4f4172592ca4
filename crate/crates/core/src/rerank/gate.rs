//! The admission gate applied before scoring.
//!
//! A trial is admitted only if it is relevant on condition, age and gender,
//! and some evidence says the patient is eligible. Strict mode also rejects
//! any trial with an Excluded judgment, fine or coarse.

use serde::{Deserialize, Serialize};

use crate::labeling::TrialJudgments;
use crate::model::{age_intersect, gender_match, CoarseLabel, EligibilityLabel, PatientProfile, TrialRecord};
use crate::retrieval::condition_relevance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateMode {
    Strict,
    #[default]
    Lenient,
}

impl std::str::FromStr for GateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "strict" => Ok(GateMode::Strict),
            "lenient" => Ok(GateMode::Lenient),
            _ => Err(format!("unknown gate mode `{s}` (expected strict or lenient)")),
        }
    }
}

impl std::fmt::Display for GateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GateMode::Strict => "strict",
            GateMode::Lenient => "lenient",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Condition, age or gender relevance is empty.
    NotRelevant,
    /// Strict mode saw an Excluded judgment.
    Excluded,
    /// No fine or coarse judgment says Eligible.
    NoEligibleEvidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateDecision {
    Admit,
    Reject(RejectReason),
}

impl GateDecision {
    pub fn is_admit(self) -> bool {
        self == GateDecision::Admit
    }
}

/// Whether each relevance set of a patient/trial pair is non-empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relevance {
    pub condition: bool,
    pub age: bool,
    pub gender: bool,
}

impl Relevance {
    pub fn of(p: &PatientProfile, r: &TrialRecord) -> Self {
        Self {
            condition: !condition_relevance(p, r).is_empty(),
            age: !age_intersect(&p.age, &r.age).is_empty(),
            gender: gender_match(&p.gender, &r.gender),
        }
    }

    pub fn all() -> Self {
        Self { condition: true, age: true, gender: true }
    }

    pub fn holds(self) -> bool {
        self.condition && self.age && self.gender
    }
}

pub fn deontic_gate(rel: Relevance, j: &TrialJudgments, mode: GateMode) -> GateDecision {
    if !rel.holds() {
        return GateDecision::Reject(RejectReason::NotRelevant);
    }
    if mode == GateMode::Strict {
        let fine_excluded = j.fine.iter().any(|c| c.label == EligibilityLabel::Excluded);
        if fine_excluded || j.coarse == Some(CoarseLabel::Excluded) {
            return GateDecision::Reject(RejectReason::Excluded);
        }
    }
    let fine_eligible = j.fine.iter().any(|c| c.label == EligibilityLabel::Eligible);
    if !fine_eligible && j.coarse != Some(CoarseLabel::Eligible) {
        return GateDecision::Reject(RejectReason::NoEligibleEvidence);
    }
    GateDecision::Admit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{CriterionJudgment, TemplateName};
    use crate::model::{Category, Polarity};
    use EligibilityLabel::*;

    fn judgments(labels: &[(Polarity, EligibilityLabel)], coarse: Option<CoarseLabel>) -> TrialJudgments {
        TrialJudgments {
            trial_id: "t".into(),
            fine: labels
                .iter()
                .enumerate()
                .map(|(i, &(polarity, label))| CriterionJudgment {
                    trial_id: "t".into(),
                    criterion_index: i,
                    polarity,
                    categories: [Category::Disease].into(),
                    label,
                    template: TemplateName::InclusionLabeling,
                    degraded: false,
                })
                .collect(),
            coarse,
            coarse_degraded: false,
        }
    }

    #[test]
    fn relevance_first() {
        let j = judgments(&[(Polarity::Inclusion, Eligible)], Some(CoarseLabel::Eligible));
        for rel in [
            Relevance { condition: false, ..Relevance::all() },
            Relevance { age: false, ..Relevance::all() },
            Relevance { gender: false, ..Relevance::all() },
        ] {
            for mode in [GateMode::Strict, GateMode::Lenient] {
                assert_eq!(deontic_gate(rel, &j, mode), GateDecision::Reject(RejectReason::NotRelevant));
            }
        }
    }

    #[test]
    fn strict_rejects_any_exclusion() {
        let all = Relevance::all();
        let j = judgments(&[(Polarity::Inclusion, Eligible), (Polarity::Exclusion, Excluded)], None);
        assert_eq!(deontic_gate(all, &j, GateMode::Strict), GateDecision::Reject(RejectReason::Excluded));
        assert_eq!(deontic_gate(all, &j, GateMode::Lenient), GateDecision::Admit);
        let j = judgments(&[(Polarity::Inclusion, Eligible)], Some(CoarseLabel::Excluded));
        assert_eq!(deontic_gate(all, &j, GateMode::Strict), GateDecision::Reject(RejectReason::Excluded));
        assert_eq!(deontic_gate(all, &j, GateMode::Lenient), GateDecision::Admit);
    }

    #[test]
    fn needs_eligible_evidence() {
        let all = Relevance::all();
        let j = judgments(&[(Polarity::Inclusion, NotEnoughInfo)], None);
        for mode in [GateMode::Strict, GateMode::Lenient] {
            assert_eq!(deontic_gate(all, &j, mode), GateDecision::Reject(RejectReason::NoEligibleEvidence));
        }
        let j = judgments(&[(Polarity::Exclusion, Eligible)], None);
        assert!(deontic_gate(all, &j, GateMode::Strict).is_admit());
        let j = judgments(&[(Polarity::Inclusion, NotEnoughInfo)], Some(CoarseLabel::Eligible));
        assert!(deontic_gate(all, &j, GateMode::Strict).is_admit());
        assert!("STRICT".parse::<GateMode>().is_ok() && "x".parse::<GateMode>().is_err());
    }
}
