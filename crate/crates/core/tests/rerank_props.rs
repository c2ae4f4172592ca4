mod common;

use std::collections::{BTreeSet, HashMap};

use common::*;
use proptest::prelude::*;
use trialset_core::labeling::TrialJudgments;
use trialset_core::model::{Category, CoarseLabel, EligibilityLabel, Polarity};
use trialset_core::rerank::{
    count_labels, deontic_gate, rerank, score, CandidateEvidence, CategoryCounting, GateMode, RerankConfig,
    Relevance, ScoringMethod,
};
use trialset_core::retrieval::{Provenance, RankedList};

fn label_strategy() -> impl Strategy<Value = EligibilityLabel> {
    prop_oneof![Just(E), Just(X), Just(N)]
}

fn coarse_strategy() -> impl Strategy<Value = Option<CoarseLabel>> {
    prop_oneof![Just(None), Just(Some(CoarseLabel::Eligible)), Just(Some(CoarseLabel::Excluded))]
}

fn judgments_strategy() -> impl Strategy<Value = TrialJudgments> {
    let fine = prop::collection::vec((any::<bool>(), 0usize..3, label_strategy()), 0..10);
    (fine, coarse_strategy()).prop_map(|(fine, coarse)| TrialJudgments {
        trial_id: "t".into(),
        fine: fine
            .into_iter()
            .enumerate()
            .map(|(i, (inc, a, l))| judgment(i, if inc { INC } else { EXC }, Category::ALL[a], l))
            .collect(),
        coarse,
        coarse_degraded: false,
    })
}

fn relevance_strategy() -> impl Strategy<Value = Relevance> {
    (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(condition, age, gender)| Relevance { condition, age, gender })
}

const RATIOS: [ScoringMethod; 5] =
    [ScoringMethod::Ie, ScoringMethod::Fie, ScoringMethod::Fio, ScoringMethod::Ee, ScoringMethod::Ge];

#[test]
fn golden_table_matches() {
    for case in golden_table() {
        let c = counts(&case.cells);
        for (m, want) in golden_methods().iter().zip(case.expect) {
            let got = score(*m, &c, case.coarse, case.ov).value;
            assert!((got - want).abs() < 1e-12, "{} {m}: {got} vs {want}", case.name);
        }
    }
}

proptest! {
    #[test]
    fn strict_admission_implies_lenient(j in judgments_strategy(), rel in relevance_strategy()) {
        if deontic_gate(rel, &j, GateMode::Strict).is_admit() {
            prop_assert!(deontic_gate(rel, &j, GateMode::Lenient).is_admit());
        }
    }

    #[test]
    fn not_enough_info_is_neutral(j in judgments_strategy(), rel in relevance_strategy(), inc in any::<bool>(), a in 0usize..3) {
        let mut more = j.clone();
        let pol = if inc { Polarity::Inclusion } else { Polarity::Exclusion };
        more.fine.push(judgment(j.fine.len(), pol, Category::ALL[a], N));
        for mode in [GateMode::Strict, GateMode::Lenient] {
            prop_assert_eq!(deontic_gate(rel, &j, mode), deontic_gate(rel, &more, mode));
        }
        let (c0, c1) = (count_labels(&j, CategoryCounting::PerCategory), count_labels(&more, CategoryCounting::PerCategory));
        for m in RATIOS {
            prop_assert!(score(m, &c1, None, 0.0).value <= score(m, &c0, None, 0.0).value);
        }
        let (a0, a1) = (score(ScoringMethod::Contrast, &c0, None, 0.0).value, score(ScoringMethod::Contrast, &c1, None, 0.0).value);
        prop_assert!(a1.abs() <= a0.abs() + 1e-15);
        prop_assert_eq!(a0.signum() * a1.signum() >= 0.0, true);
    }

    #[test]
    fn filtered_scores_never_exceed_ie(j in judgments_strategy(), counting in prop_oneof![Just(CategoryCounting::PerCategory), Just(CategoryCounting::Once)]) {
        let c = count_labels(&j, counting);
        let ie = score(ScoringMethod::Ie, &c, None, 0.0).value;
        let fie = score(ScoringMethod::Fie, &c, None, 0.0).value;
        let fio = score(ScoringMethod::Fio, &c, None, 0.0).value;
        prop_assert!(fie <= fio && fio <= ie);
        if !j.fine.iter().any(|f| f.label == X) {
            prop_assert_eq!(fie, ie);
        }
    }

    #[test]
    fn boosts_add_at_most_one(j in judgments_strategy(), ov in 0.0f64..=1.0) {
        let c = count_labels(&j, CategoryCounting::PerCategory);
        let ie = score(ScoringMethod::Ie, &c, None, ov).value;
        let hy = score(ScoringMethod::Hybrid, &c, j.coarse, ov).value;
        let cg = score(ScoringMethod::Cg, &c, j.coarse, ov).value;
        let bonus = if j.coarse == Some(CoarseLabel::Eligible) { 1.0 } else { 0.0 };
        prop_assert_eq!(hy, ie + bonus);
        prop_assert_eq!(cg, ov + bonus);
    }

    #[test]
    fn survivors_are_a_permutation_of_admitted(
        js in prop::collection::vec((judgments_strategy(), relevance_strategy(), 0.0f64..=1.0), 0..25),
        strict in any::<bool>(),
        method in prop_oneof![Just(ScoringMethod::Ie), Just(ScoringMethod::Hybrid), Just(ScoringMethod::Cg), Just(ScoringMethod::Contrast)],
        seed in any::<u64>(),
    ) {
        let gate = if strict { GateMode::Strict } else { GateMode::Lenient };
        let cfg = RerankConfig { method, gate, ..Default::default() };
        let mut evidence = HashMap::new();
        let mut items = Vec::new();
        for (i, (mut j, rel, ov)) in js.into_iter().enumerate() {
            let id = format!("NCT{i:04}");
            j.trial_id = id.clone();
            evidence.insert(id.clone(), CandidateEvidence { relevance: rel, judgments: j });
            items.push((id, ov));
        }
        let cands = RankedList::from_scores(items.clone(), Provenance::ConditionRelevance);
        let out = rerank(&cands, &evidence, &cfg).unwrap();
        let admitted: BTreeSet<&str> = out.outcomes.iter().filter(|o| o.decision.is_admit()).map(|o| o.trial_id.as_str()).collect();
        let ranked: Vec<&str> = out.ranked.ids().collect();
        prop_assert_eq!(ranked.len(), admitted.len());
        prop_assert_eq!(ranked.iter().copied().collect::<BTreeSet<_>>(), admitted);
        for w in out.ranked.entries().windows(2) {
            prop_assert!(w[0].score >= w[1].score);
        }
        // input order does not matter
        let mut shuffled = items;
        let n = shuffled.len().max(1);
        shuffled.rotate_left((seed as usize) % n);
        let reordered = RankedList::from_ordered(shuffled.into_iter().map(|(id, s)| (id, s, Provenance::ConditionRelevance)));
        let again = rerank(&reordered, &evidence, &cfg).unwrap();
        prop_assert_eq!(again.ranked.ids().collect::<Vec<_>>(), ranked);
    }
}

#[test]
fn bounds_hold_on_random_counts() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20_000 {
        let c = random_counts(&mut rng);
        for m in RATIOS {
            let v = score(m, &c, None, 0.0).value;
            assert!((0.0..=1.0).contains(&v), "{m}: {v}");
        }
        let v = score(ScoringMethod::WContrast { alpha: 1.0, beta: 2.0 }, &c, None, 0.0).value;
        assert!((-2.0..=1.0).contains(&v));
    }
}
