//! Oracles, fixtures and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::PathBuf;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use trialset_core::eval::{Qrels, TopicQrels};
use trialset_core::labeling::{CriterionJudgment, TemplateName, TrialJudgments};
use trialset_core::model::{
    AgeSet, Category, CoarseLabel, ConceptSet, EligibilityLabel, GenderSet, PatientProfile, Polarity, TrialRecord,
};
use trialset_core::ontology::{Concept, OntologyGraph};
use trialset_core::rerank::{LabelCounts, ScoringMethod};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// 50-concept medical ontology.
pub fn toy_graph() -> OntologyGraph {
    OntologyGraph::load(fixture("toy_ontology.jsonl")).expect("toy ontology loads")
}

/// Held-out phrases that are not verbatim concept names.
pub fn toy_queries() -> Vec<String> {
    std::fs::read_to_string(fixture("normalization_queries.txt"))
        .expect("query fixture")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect()
}

// ---------------------------------------------------------------- metrics

fn grade_of(q: &TopicQrels, id: &str) -> u8 {
    q.get(id).copied().unwrap_or(0)
}

pub fn naive_ndcg(ranking: &[String], q: &TopicQrels, k: usize) -> f64 {
    let mut dcg = 0.0;
    for (i, id) in ranking.iter().enumerate() {
        if i >= k {
            break;
        }
        let rank = (i + 1) as f64;
        dcg += grade_of(q, id) as f64 / (rank + 1.0).log2();
    }
    let mut grades: Vec<u8> = q.values().copied().collect();
    grades.sort();
    grades.reverse();
    let mut idcg = 0.0;
    for (i, g) in grades.iter().enumerate() {
        if i >= k {
            break;
        }
        idcg += *g as f64 / ((i + 2) as f64).log2();
    }
    if idcg > 0.0 {
        dcg / idcg
    } else {
        0.0
    }
}

pub fn naive_precision(ranking: &[String], q: &TopicQrels, k: usize, t: u8) -> f64 {
    let mut hits = 0;
    for i in 0..k {
        if let Some(id) = ranking.get(i) {
            if grade_of(q, id) >= t {
                hits += 1;
            }
        }
    }
    hits as f64 / k as f64
}

pub fn naive_recall(ranking: &[String], q: &TopicQrels, n: usize, t: u8) -> Option<f64> {
    let relevant: Vec<&String> = q.iter().filter(|(_, g)| **g >= t).map(|(id, _)| id).collect();
    if relevant.is_empty() {
        return None;
    }
    let top: Vec<&String> = ranking.iter().take(n).collect();
    let found = relevant.iter().filter(|id| top.contains(id)).count();
    Some(found as f64 / relevant.len() as f64)
}

pub fn naive_mrr(ranking: &[String], q: &TopicQrels, t: u8) -> f64 {
    for (i, id) in ranking.iter().enumerate() {
        if grade_of(q, id) >= t {
            return 1.0 / (i as f64 + 1.0);
        }
    }
    0.0
}

/// One fuzzed topic: a ranking with unjudged ids mixed in and its judgments.
pub fn random_topic(rng: &mut ChaCha8Rng) -> (Vec<String>, TopicQrels) {
    let pool: Vec<String> = (0..rng.random_range(1..80)).map(|i| format!("d{i}")).collect();
    let mut judged = TopicQrels::new();
    for id in &pool {
        if rng.random_bool(0.6) {
            judged.insert(id.clone(), rng.random_range(0..=2));
        }
    }
    let mut ranking = pool.clone();
    ranking.shuffle(rng);
    ranking.truncate(rng.random_range(0..=pool.len()));
    (ranking, judged)
}

/// Multi-topic qrels plus rankings; some judged topics get no ranking.
pub fn random_run(rng: &mut ChaCha8Rng) -> (BTreeMap<String, Vec<String>>, Qrels) {
    let mut qrels = Qrels::new();
    let mut run = BTreeMap::new();
    for t in 0..rng.random_range(1..6) {
        let topic = format!("q{t}");
        let (ranking, judged) = random_topic(rng);
        for (id, g) in &judged {
            qrels.insert(&topic, id, *g).unwrap();
        }
        if !judged.is_empty() && rng.random_bool(0.9) {
            run.insert(topic, ranking);
        }
    }
    (run, qrels)
}

// ---------------------------------------------------------------- ontology

/// Random DAG: every node after the first few roots picks parents among
/// earlier nodes.
pub fn random_dag(rng: &mut ChaCha8Rng, max_nodes: usize) -> OntologyGraph {
    let n = rng.random_range(2..=max_nodes);
    let roots = rng.random_range(1..=3.min(n));
    let mut concepts = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("n{i}");
        let parents: Vec<String> = if i < roots {
            Vec::new()
        } else {
            let k = rng.random_range(1..=3.min(i));
            let mut ps: BTreeSet<usize> = BTreeSet::new();
            while ps.len() < k {
                // favour recent parents so depth grows
                let lo = i.saturating_sub(20);
                let p = if rng.random_bool(0.8) { rng.random_range(lo..i) } else { rng.random_range(0..i) };
                ps.insert(p);
            }
            ps.into_iter().map(|p| format!("n{p}")).collect()
        };
        let refs: Vec<&str> = parents.iter().map(String::as_str).collect();
        concepts.push(Concept::new(&id, &format!("concept {i}"), &refs));
    }
    OntologyGraph::from_concepts(concepts).expect("valid dag")
}

/// Neighbourhood by repeated frontier growth over parent and child links.
pub fn frontier_neighbourhood(concepts: &[Concept], start: &str, n: u32) -> BTreeSet<String> {
    let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
    for c in concepts {
        for p in &c.parents {
            adj.entry(c.id.as_str()).or_default().push(p.as_str());
            adj.entry(p.as_str()).or_default().push(c.id.as_str());
        }
    }
    let mut seen: BTreeSet<String> = BTreeSet::from([start.to_string()]);
    for _ in 0..n {
        let mut next = seen.clone();
        for s in &seen {
            for v in adj.get(s.as_str()).into_iter().flatten() {
                next.insert(v.to_string());
            }
        }
        if next.len() == seen.len() {
            break;
        }
        seen = next;
    }
    seen
}

pub fn concept_ids(s: &ConceptSet) -> BTreeSet<String> {
    s.iter().map(|c| c.as_str().to_string()).collect()
}

/// Word-set Jaccard computed without the library shingler.
pub fn naive_jaccard(a: &str, b: &str) -> f64 {
    let words = |s: &str| -> HashSet<String> {
        s.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect()
    };
    let (a, b) = (words(a), words(b));
    let union = a.union(&b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(&b).count() as f64 / union as f64
    }
}

/// Best concept by full scan; ties go to the smallest id.
pub fn exhaustive_argmax(g: &OntologyGraph, phrase: &str) -> (String, f64) {
    let mut best: Option<(String, f64)> = None;
    for c in g.concepts() {
        let mut s = naive_jaccard(phrase, &c.label);
        for syn in &c.synonyms {
            s = s.max(naive_jaccard(phrase, syn));
        }
        let take = match &best {
            None => true,
            Some((id, bs)) => s > *bs || (s == *bs && c.id.as_str() < id.as_str()),
        };
        if take {
            best = Some((c.id.as_str().to_string(), s));
        }
    }
    best.expect("non-empty ontology")
}

// ---------------------------------------------------------------- retrieval

pub fn trial_with_conditions(id: &str, conds: &[String]) -> TrialRecord {
    TrialRecord {
        id: id.to_string(),
        age: AgeSet::full(),
        gender: GenderSet::all(),
        condition_raw: Default::default(),
        condition_norm: conds.iter().map(String::as_str).collect(),
        criteria: Vec::new(),
        raw_text: String::new(),
    }
}

/// Overlap ranking by scanning every trial: score desc, id asc, score > 0.
pub fn exhaustive_overlap(expanded: &BTreeSet<String>, trials: &[TrialRecord], k: usize) -> Vec<(String, f64)> {
    let mut scored = Vec::new();
    for t in trials {
        let conds = concept_ids(&t.condition_norm);
        let shared = conds.intersection(expanded).count();
        let m = conds.len().min(expanded.len());
        if shared > 0 && m > 0 {
            scored.push((t.id.clone(), shared as f64 / m as f64));
        }
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

pub fn patient_with_expanded(expanded: &BTreeSet<String>) -> PatientProfile {
    let mut p = PatientProfile::new("p", "");
    p.diagnosis_expanded = expanded.iter().map(String::as_str).collect();
    p
}

// ---------------------------------------------------------------- scoring

pub const T: Category = Category::Treatment;
pub const D: Category = Category::Demographic;
pub const S: Category = Category::Disease;
pub const INC: Polarity = Polarity::Inclusion;
pub const EXC: Polarity = Polarity::Exclusion;
pub const E: EligibilityLabel = EligibilityLabel::Eligible;
pub const X: EligibilityLabel = EligibilityLabel::Excluded;
pub const N: EligibilityLabel = EligibilityLabel::NotEnoughInfo;

pub fn counts(cells: &[(Category, Polarity, EligibilityLabel, u32)]) -> LabelCounts {
    let mut c = LabelCounts::new();
    for &(a, p, l, n) in cells {
        c.add(a, p, l, n);
    }
    c
}

/// One hand-computed row: inputs and the expected value of every method.
pub struct GoldenCase {
    pub name: &'static str,
    pub cells: Vec<(Category, Polarity, EligibilityLabel, u32)>,
    pub coarse: Option<CoarseLabel>,
    pub ov: f64,
    /// ie, fie, fio, ee, ge, contrast, wcontrast(1,2), cg, hybrid, disease-only
    pub expect: [f64; 10],
}

pub fn golden_methods() -> [ScoringMethod; 10] {
    [
        ScoringMethod::Ie,
        ScoringMethod::Fie,
        ScoringMethod::Fio,
        ScoringMethod::Ee,
        ScoringMethod::Ge,
        ScoringMethod::Contrast,
        ScoringMethod::WContrast { alpha: 1.0, beta: 2.0 },
        ScoringMethod::Cg,
        ScoringMethod::Hybrid,
        ScoringMethod::RestrictedIe(Category::Disease),
    ]
}

pub fn golden_table() -> Vec<GoldenCase> {
    use CoarseLabel::{Eligible as CE, Excluded as CX};
    let c = |name, cells, coarse, ov, expect| GoldenCase { name, cells, coarse, ov, expect };
    vec![
        c("ie one", vec![(S, INC, E, 3), (S, EXC, N, 1)], None, 0.5,
          [1.0, 1.0, 1.0, 0.0, 0.75, 0.75, 0.75, 0.5, 1.0, 1.0]),
        c("fie zeroed by exclusion", vec![(S, INC, E, 2), (T, INC, N, 2), (S, EXC, X, 1)], None, 1.0,
          [0.5, 0.0, 0.5, 0.0, 0.4, 0.2, 0.0, 1.0, 0.5, 1.0]),
        c("fio zeroed by inclusion", vec![(S, INC, E, 1), (D, INC, X, 1)], None, 0.25,
          [0.5, 0.0, 0.0, 0.0, 0.5, 0.0, -0.5, 0.25, 0.5, 1.0]),
        c("contrast negative", vec![(S, INC, X, 3), (T, INC, E, 1), (S, EXC, X, 2)], Some(CX), 0.75,
          [0.25, 0.0, 0.0, 0.0, 1.0 / 6.0, -2.0 / 3.0, -1.5, 0.75, 0.25, 0.0]),
        c("cg boost without fine evidence", vec![(S, INC, N, 2)], Some(CE), 0.4,
          [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.4, 1.0, 0.0]),
        c("hybrid boost", vec![(S, INC, E, 1), (S, INC, N, 1), (T, EXC, E, 1)], Some(CE), 0.2,
          [0.5, 0.5, 0.5, 1.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.2, 1.5, 0.5]),
        c("no criteria", vec![], None, 0.0,
          [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        c("exclusion only", vec![(S, EXC, E, 2), (T, EXC, N, 2)], None, 1.0,
          [0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5, 1.0, 0.0, 0.0]),
        c("mixed categories", vec![(T, INC, E, 1), (D, INC, E, 1), (S, INC, X, 1), (S, INC, N, 1), (D, EXC, N, 1)],
          Some(CE), 0.6, [0.5, 0.0, 0.0, 0.0, 0.4, 0.2, 0.0, 1.6, 1.5, 0.0]),
        c("all not enough info", vec![(S, INC, N, 2), (S, EXC, N, 2)], None, 0.3,
          [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0]),
        c("restricted differs", vec![(S, INC, E, 1), (T, INC, N, 3)], None, 0.5,
          [0.25, 0.25, 0.25, 0.0, 0.25, 0.25, 0.25, 0.5, 0.25, 1.0]),
        c("fio keeps exclusion-only excluded", vec![(S, INC, E, 3), (T, INC, E, 1), (D, EXC, X, 1), (S, EXC, E, 1)],
          Some(CE), 0.9, [1.0, 0.0, 1.0, 0.5, 5.0 / 6.0, 2.0 / 3.0, 0.5, 1.9, 2.0, 1.0]),
    ]
}

pub fn random_counts(rng: &mut ChaCha8Rng) -> LabelCounts {
    let mut c = LabelCounts::new();
    let max = if rng.random_bool(0.2) { 1 } else { 6 };
    for a in Category::ALL {
        for p in [INC, EXC] {
            for l in EligibilityLabel::ALL {
                if rng.random_bool(0.5) {
                    c.add(a, p, l, rng.random_range(0..=max));
                }
            }
        }
    }
    c
}

// ---------------------------------------------------------------- judgments

pub fn judgment(i: usize, polarity: Polarity, category: Category, label: EligibilityLabel) -> CriterionJudgment {
    CriterionJudgment {
        trial_id: "t".into(),
        criterion_index: i,
        polarity,
        categories: [category].into(),
        label,
        template: match polarity {
            Polarity::Inclusion => TemplateName::InclusionLabeling,
            Polarity::Exclusion => TemplateName::ExclusionLabeling,
        },
        degraded: false,
    }
}

pub fn judgments(fine: &[(Polarity, EligibilityLabel)], coarse: Option<CoarseLabel>) -> TrialJudgments {
    TrialJudgments {
        trial_id: "t".into(),
        fine: fine.iter().enumerate().map(|(i, &(p, l))| judgment(i, p, Category::Disease, l)).collect(),
        coarse,
        coarse_degraded: false,
    }
}

pub fn random_judgments(rng: &mut ChaCha8Rng, id: &str) -> TrialJudgments {
    let n = rng.random_range(0..8);
    let fine = (0..n)
        .map(|i| {
            let p = if rng.random_bool(0.6) { INC } else { EXC };
            let a = *Category::ALL.choose(rng).unwrap();
            let l = *EligibilityLabel::ALL.choose(rng).unwrap();
            CriterionJudgment { trial_id: id.into(), ..judgment(i, p, a, l) }
        })
        .collect();
    let coarse = [None, Some(CoarseLabel::Eligible), Some(CoarseLabel::Excluded)].choose(rng).copied().flatten();
    TrialJudgments { trial_id: id.into(), fine, coarse, coarse_degraded: false }
}
