//! Synthetic benchmark with a planted ideal ranking.
//!
//! Each topic owns a branch of a generated ontology: its diagnosis, one
//! child, and a chain of four ancestors each with one extra child. Trials
//! target concepts at a known hop distance from the diagnosis. Trials within
//! one hop are all relevant (eligible, excluded by a criterion, or
//! demographically incompatible); farther trials are mostly irrelevant, so
//! widening the expansion raises recall while lowering precision.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError};
use crate::eval::Qrels;
use crate::ontology::Concept;
use crate::records::{AgeBound, RawAge, RawEligibility, RawTopic, RawTrial};

const ORGANS: &[&str] = &[
    "lung", "liver", "kidney", "heart", "skin", "bone", "eye", "ear", "colon", "pancreas", "thyroid", "bladder",
    "prostate", "ovary", "brain", "spine", "stomach", "esophagus", "muscle", "blood",
];

const CONDITIONS: &[&str] = &[
    "hypertension", "diabetes mellitus", "atrial fibrillation", "asthma", "hypothyroidism", "migraine", "gout",
    "osteoporosis", "depression", "epilepsy", "psoriasis", "sarcoidosis",
];

const DRUGS: &[&str] =
    &["methotrexate", "prednisone", "metformin", "warfarin", "insulin", "amiodarone", "tacrolimus", "azathioprine"];

pub const ROOT_ID: &str = "100000";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub topics: usize,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self { topics: 20, seed: 42 }
    }
}

/// Why a trial was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantedKind {
    /// Within one hop, every criterion satisfiable: grade 2.
    Eligible,
    /// Within one hop, failing a criterion: grade 1.
    Excluded,
    /// Within one hop, age or gender incompatible: grade 1.
    Demographic,
    /// Two to four hops away but still relevant: grade 1.
    Distant,
    /// Two to four hops away and irrelevant: grade 0.
    Irrelevant,
}

impl PlantedKind {
    pub fn grade(self) -> u8 {
        match self {
            PlantedKind::Eligible => 2,
            PlantedKind::Irrelevant => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedTrial {
    pub topic: String,
    pub trial: String,
    pub hop: u32,
    pub kind: PlantedKind,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub concepts: Vec<Concept>,
    pub trials: Vec<RawTrial>,
    pub topics: Vec<RawTopic>,
    pub qrels: Qrels,
    pub planted: Vec<PlantedTrial>,
}

struct Patient {
    age: u32,
    female: bool,
    diagnosis: String,
    history: String,
    absent: String,
    drug: String,
    bmi: f64,
}

impl Patient {
    fn note(&self) -> String {
        let who = if self.female { "woman" } else { "man" };
        format!(
            "A {}-year-old {who} diagnosed with {}. History of {}. No history of {}. Previously treated with {}. BMI of {:.1}.",
            self.age, self.diagnosis, self.history, self.absent, self.drug, self.bmi
        )
    }
}

/// Concept ids and labels of one topic branch, indexed by hop.
struct Branch {
    diagnosis: (String, String),
    /// `by_hop[h]` lists (id, label) of concepts exactly `h` hops away.
    by_hop: [Vec<(String, String)>; 5],
}

fn branch(t: usize, concepts: &mut Vec<Concept>) -> Branch {
    let mut organ = ORGANS[t % ORGANS.len()].to_string();
    if t >= ORGANS.len() {
        organ = format!("{organ} group {}", t / ORGANS.len() + 1);
    }
    let base = 200_000 + 100 * t;
    let id = |off: usize| (base + off).to_string();
    // extra ancestors above the chain vary diagnosis depth across topics
    let extra = t % 3;
    let mut top = ROOT_ID.to_string();
    for j in 0..extra {
        let cid = id(20 + j);
        concepts.push(Concept::new(&cid, &format!("{organ} finding level {}", j + 1), &[&top]));
        top = cid;
    }
    let specs: [(usize, String, usize, u32); 9] = [
        (1, format!("{organ} disorder"), 0, 4),
        (2, format!("{organ} inflammatory disorder"), 1, 3),
        (3, format!("{organ} autoimmune inflammatory disorder"), 2, 4),
        (4, format!("chronic {organ} inflammation"), 2, 2),
        (5, format!("acute {organ} inflammation"), 4, 3),
        (6, format!("chronic {organ} fibrosis"), 4, 1),
        (7, format!("chronic {organ} sclerosis"), 6, 2),
        (8, format!("progressive {organ} fibrosis"), 6, 0),
        (9, format!("progressive {organ} fibrosis with calcification"), 8, 1),
    ];
    let mut by_hop: [Vec<(String, String)>; 5] = Default::default();
    for (off, label, parent, hop) in &specs {
        let parent_id = if *parent == 0 { top.clone() } else { id(*parent) };
        let mut c = Concept::new(&id(*off), label, &[&parent_id]);
        if *off == 8 {
            c = c.with_synonyms(&[&format!("progressive fibrotic {organ} disease")]);
        }
        concepts.push(c);
        by_hop[*hop as usize].push((id(*off), label.clone()));
    }
    Branch { diagnosis: (id(8), specs[7].1.clone()), by_hop }
}

fn years(n: u32) -> AgeBound {
    AgeBound::Text(format!("{n} Years"))
}

struct TrialDraft {
    condition: String,
    inclusion: Vec<String>,
    exclusion: Vec<String>,
    age: (u32, u32),
    gender: &'static str,
}

impl TrialDraft {
    fn into_raw(self, id: String) -> RawTrial {
        let text = format!(
            "Study of {}. Inclusion criteria: {}. Exclusion criteria: {}.",
            self.condition,
            self.inclusion.join("; "),
            self.exclusion.join("; ")
        );
        RawTrial {
            id,
            condition: vec![self.condition],
            eligibility: RawEligibility { inclusion: self.inclusion, exclusion: self.exclusion },
            age: RawAge { min: Some(years(self.age.0)), max: Some(years(self.age.1)) },
            gender: Some(self.gender.to_string()),
            text,
        }
    }
}

fn other<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str], avoid: &[&str]) -> &'a str {
    let choices: Vec<&str> = pool.iter().copied().filter(|c| !avoid.contains(c)).collect();
    choices.choose(rng).expect("pool larger than avoid list")
}

fn draft(rng: &mut ChaCha8Rng, kind: PlantedKind, condition: &str, p: &Patient) -> TrialDraft {
    let lo = rng.random_range(18..=p.age.clamp(18, 40));
    let hi = rng.random_range(p.age.max(60)..=90);
    let mut d = TrialDraft {
        condition: condition.to_string(),
        inclusion: vec![format!("Diagnosis of {}", p.diagnosis), format!("Age {lo} to {hi} years")],
        exclusion: vec![format!("History of {}", p.absent)],
        age: (lo, hi),
        gender: "All",
    };
    let drug = other(rng, DRUGS, &[&p.drug]);
    d.exclusion.push(format!("Prior treatment with {drug}"));
    match kind {
        PlantedKind::Eligible => {
            if rng.random_bool(0.5) {
                d.inclusion.push(format!("BMI < {}", (p.bmi + 5.0).ceil()));
            }
            if rng.random_bool(0.5) {
                d.inclusion.push(format!("Previously treated with {}", p.drug));
            }
        }
        PlantedKind::Excluded | PlantedKind::Distant => {
            if rng.random_bool(0.7) {
                d.exclusion.push(format!("History of {}", p.history));
            } else {
                d.inclusion.push(format!("BMI < {}", (p.bmi - 3.0).floor()));
            }
        }
        PlantedKind::Demographic => {
            if rng.random_bool(0.5) {
                d.gender = if p.female { "Male" } else { "Female" };
            } else if p.age >= 30 {
                d.age = (18, p.age - rng.random_range(3..=10));
                d.inclusion[1] = format!("Age {} to {} years", d.age.0, d.age.1);
            } else {
                d.age = (p.age + rng.random_range(3..=10), 90);
                d.inclusion[1] = format!("Age {} to {} years", d.age.0, d.age.1);
            }
        }
        PlantedKind::Irrelevant => {
            d.inclusion[0] = format!("Diagnosis of {condition}");
            let cond = other(rng, CONDITIONS, &[&p.history, &p.absent]);
            d.exclusion[0] = format!("History of {cond}");
        }
    }
    if d.gender == "All" && rng.random_bool(0.2) {
        d.gender = if p.female { "Female" } else { "Male" };
    }
    d
}

pub fn generate(spec: &BenchmarkSpec) -> Benchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut concepts = vec![Concept::new(ROOT_ID, "clinical finding", &[])];
    let mut trials = Vec::new();
    let mut topics = Vec::new();
    let mut planted = Vec::new();
    let mut qrels = Qrels::new();
    let mut used_ids = HashSet::new();

    for t in 0..spec.topics {
        let br = branch(t, &mut concepts);
        let topic_id = format!("T{:03}", t + 1);
        let mut conds: Vec<&str> = CONDITIONS.to_vec();
        conds.shuffle(&mut rng);
        let p = Patient {
            age: rng.random_range(25..=75),
            female: rng.random_bool(0.5),
            diagnosis: br.diagnosis.1.clone(),
            history: conds[0].to_string(),
            absent: conds[1].to_string(),
            drug: DRUGS.choose(&mut rng).unwrap().to_string(),
            bmi: (rng.random_range(190..=340) as f64) / 10.0,
        };
        topics.push(RawTopic { id: topic_id.clone(), note: p.note() });

        let near: Vec<&(String, String)> =
            br.by_hop[0].iter().chain(&br.by_hop[1]).collect();
        let mut plan: Vec<(PlantedKind, u32)> = Vec::new();
        let counts = [
            (PlantedKind::Eligible, 0, rng.random_range(10..=14)),
            (PlantedKind::Excluded, 0, rng.random_range(5..=7)),
            (PlantedKind::Demographic, 0, rng.random_range(3..=5)),
            (PlantedKind::Distant, 2, rng.random_range(2..=4)),
            (PlantedKind::Irrelevant, 2, rng.random_range(5..=7)),
            (PlantedKind::Distant, 3, rng.random_range(1..=3)),
            (PlantedKind::Irrelevant, 3, rng.random_range(9..=11)),
            (PlantedKind::Distant, 4, rng.random_range(0..=2)),
            (PlantedKind::Irrelevant, 4, rng.random_range(11..=13)),
        ];
        for (kind, hop, n) in counts {
            plan.extend(std::iter::repeat_n((kind, hop), n));
        }
        for (kind, hop) in plan {
            let (cid, label) = if hop == 0 {
                // weighted toward the diagnosis itself
                if rng.random_bool(0.6) { &br.by_hop[0][0] } else { *near.choose(&mut rng).unwrap() }
            } else {
                br.by_hop[hop as usize].choose(&mut rng).unwrap()
            };
            let actual_hop = br.by_hop.iter().position(|h| h.iter().any(|(i, _)| i == cid)).unwrap() as u32;
            let id = loop {
                let id = format!("NCT{:08}", rng.random_range(0..100_000_000u32));
                if used_ids.insert(id.clone()) {
                    break id;
                }
            };
            let d = draft(&mut rng, kind, label, &p);
            qrels.insert(&topic_id, &id, kind.grade()).expect("unique trial ids");
            planted.push(PlantedTrial { topic: topic_id.clone(), trial: id.clone(), hop: actual_hop, kind });
            trials.push(d.into_raw(id));
        }
    }
    trials.sort_by(|a, b| a.id.cmp(&b.id));
    Benchmark { concepts, trials, topics, qrels, planted }
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for it in items {
        let _ = writeln!(out, "{}", serde_json::to_string(it).expect("serializable"));
    }
    out
}

/// Paths written by [`write_benchmark`].
#[derive(Debug, Clone)]
pub struct BenchmarkFiles {
    pub dir: PathBuf,
    pub config: PathBuf,
}

/// Writes the ontology, corpus, topics, qrels, planted labels and a ready
/// pipeline config into `dir`.
pub fn write_benchmark(b: &Benchmark, dir: &Path, seed: u64) -> Result<BenchmarkFiles, PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let write = |name: &str, body: String| {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| PipelineError::io(&p, e))
    };
    write("ontology.jsonl", jsonl(&b.concepts))?;
    write("trials.jsonl", jsonl(&b.trials))?;
    write("topics.jsonl", jsonl(&b.topics))?;
    write("planted.jsonl", jsonl(&b.planted))?;
    write("qrels.txt", b.qrels.to_text())?;
    let cfg = PipelineConfig { qrels: Some("qrels.txt".into()), seed, ..Default::default() };
    write("config.toml", cfg.to_toml())?;
    Ok(BenchmarkFiles { dir: dir.to_path_buf(), config: dir.join("config.toml") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::OntologyGraph;

    #[test]
    fn deterministic_and_well_formed() {
        let spec = BenchmarkSpec { topics: 4, seed: 7 };
        let a = generate(&spec);
        let b = generate(&spec);
        assert_eq!(a.trials, b.trials);
        assert_eq!(a.topics, b.topics);
        let g = OntologyGraph::from_concepts(a.concepts.clone()).unwrap();
        for p in &a.planted {
            let t = a.trials.iter().find(|t| t.id == p.trial).unwrap();
            let cid = g.concepts().iter().find(|c| c.label == t.condition[0]).unwrap().id.clone();
            let topic = &a.topics.iter().find(|x| x.id == p.topic).unwrap().note;
            let dx = g
                .concepts()
                .iter()
                .find(|c| topic.contains(&format!("diagnosed with {}.", c.label)))
                .unwrap()
                .id
                .clone();
            let dist = g.hop_distances(&dx, 6).unwrap().into_iter().find(|(c, _)| *c == cid).unwrap().1;
            assert_eq!(dist, p.hop, "{p:?}");
            assert_eq!(a.qrels.topic(&p.topic).unwrap()[&p.trial], p.kind.grade());
        }
        assert_ne!(generate(&BenchmarkSpec { topics: 4, seed: 8 }).trials, a.trials);
    }
}
