use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::similarity::{jaccard, phrase_similarity, Shingling};
use super::{LshParams, NnIndex, OntologyError, OntologyGraph};
use crate::model::{ConceptId, ConceptSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Full scan: the true argmax over every label and synonym.
    Exact,
    /// Best candidate among LSH bucket collisions.
    #[default]
    Approx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub concept: ConceptId,
    pub score: f64,
}

fn better(score: f64, id: &ConceptId, best: &Option<Normalization>) -> bool {
    match best {
        None => true,
        Some(b) => score > b.score || (score == b.score && *id < b.concept),
    }
}

/// `argmax_t sim(phrase, t)` over all labels and synonyms in `g`.
///
/// Ties go to the lexicographically smallest concept id. In `Approx` mode the
/// index must have been built over `g`.
pub fn normalize_term(
    phrase: &str,
    g: &OntologyGraph,
    idx: Option<&NnIndex>,
    mode: MatchMode,
) -> Result<Normalization, OntologyError> {
    if g.is_empty() {
        return Err(OntologyError::EmptyOntology);
    }
    match mode {
        MatchMode::Exact => {
            let mut best = None;
            for c in g.concepts() {
                let s = c.names().map(|n| phrase_similarity(phrase, n)).fold(0.0, f64::max);
                if better(s, &c.id, &best) {
                    best = Some(Normalization { concept: c.id.clone(), score: s });
                }
            }
            Ok(best.expect("non-empty graph"))
        }
        MatchMode::Approx => {
            let idx = idx.ok_or_else(|| OntologyError::InvalidParams("approx mode needs an index".into()))?;
            idx.query(phrase)
                .map(|(concept, score)| Normalization { concept, score })
                .ok_or_else(|| OntologyError::NoCandidate(phrase.to_string()))
        }
    }
}

/// Arithmetic mean of `sim(raw, preferred_label)` over normalized pairs.
pub fn mean_normalization_similarity(
    pairs: &[(String, ConceptId)],
    g: &OntologyGraph,
) -> Result<f64, OntologyError> {
    if pairs.is_empty() {
        return Err(OntologyError::EmptyInput);
    }
    let mut total = 0.0;
    for (raw, id) in pairs {
        let c = g.get(id).ok_or_else(|| OntologyError::UnknownConcept(id.clone()))?;
        total += phrase_similarity(raw, &c.label);
    }
    Ok(total / pairs.len() as f64)
}

/// Owns an ontology plus its LSH index and pre-shingled names, and maps
/// free-text phrases onto concept sets.
pub struct Normalizer {
    graph: OntologyGraph,
    index: NnIndex,
    names: Vec<(ConceptId, BTreeSet<String>)>,
    shingling: Shingling,
    min_score: f64,
}

impl Normalizer {
    pub fn new(graph: OntologyGraph, params: LshParams, min_score: f64) -> Result<Self, OntologyError> {
        let index = NnIndex::build(&graph, params)?;
        let shingling = params.shingling;
        let names = graph
            .concepts()
            .iter()
            .flat_map(|c| c.names().map(move |n| (c.id.clone(), shingling.shingles(n))))
            .collect();
        Ok(Self { graph, index, names, shingling, min_score })
    }

    pub fn graph(&self) -> &OntologyGraph {
        &self.graph
    }

    pub fn index(&self) -> &NnIndex {
        &self.index
    }

    fn exact(&self, phrase: &str) -> Result<Normalization, OntologyError> {
        if self.graph.is_empty() {
            return Err(OntologyError::EmptyOntology);
        }
        let q = self.shingling.shingles(phrase);
        let mut best: Option<Normalization> = None;
        for (id, sh) in &self.names {
            let s = jaccard(&q, sh);
            if better(s, id, &best) {
                best = Some(Normalization { concept: id.clone(), score: s });
            }
        }
        Ok(best.expect("non-empty graph"))
    }

    pub fn normalize(&self, phrase: &str, mode: MatchMode) -> Result<Normalization, OntologyError> {
        match mode {
            MatchMode::Exact => self.exact(phrase),
            MatchMode::Approx => self
                .index
                .query(phrase)
                .map(|(concept, score)| Normalization { concept, score })
                .ok_or_else(|| OntologyError::NoCandidate(phrase.to_string())),
        }
    }

    /// Approx lookup that falls back to the exact scan on a bucket miss.
    pub fn normalize_with_fallback(&self, phrase: &str, mode: MatchMode) -> Result<Normalization, OntologyError> {
        match self.normalize(phrase, mode) {
            Err(OntologyError::NoCandidate(_)) => self.exact(phrase),
            other => other,
        }
    }

    /// Normalizes every phrase, dropping matches whose score is zero or
    /// below the configured floor. Returns the set plus the accepted pairs.
    pub fn normalize_all<'a>(
        &self,
        phrases: impl IntoIterator<Item = &'a str>,
        mode: MatchMode,
    ) -> Result<(ConceptSet, Vec<(String, ConceptId)>), OntologyError> {
        let mut set = ConceptSet::new();
        let mut pairs = Vec::new();
        for p in phrases {
            let n = self.normalize_with_fallback(p, mode)?;
            if n.score > 0.0 && n.score >= self.min_score {
                set.insert(n.concept.clone());
                pairs.push((p.to_string(), n.concept));
            }
        }
        Ok((set, pairs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Concept;

    fn toy() -> OntologyGraph {
        OntologyGraph::from_concepts(vec![
            Concept::new("10", "eye disorder", &[]),
            Concept::new("11", "macular degeneration", &["10"]),
            Concept::new("12", "age-related macular degeneration", &["11"]).with_synonyms(&["AMD"]),
            Concept::new("13", "glaucoma", &["10"]),
        ])
        .unwrap()
    }

    #[test]
    fn exact_label_match() {
        let g = toy();
        let n = normalize_term("Glaucoma", &g, None, MatchMode::Exact).unwrap();
        assert_eq!(n, Normalization { concept: "13".into(), score: 1.0 });
        let n = normalize_term("amd", &g, None, MatchMode::Exact).unwrap();
        assert_eq!(n.concept, ConceptId::from("12"));
    }

    #[test]
    fn approx_agrees_on_label() {
        let g = toy();
        let idx = NnIndex::build(&g, LshParams::default()).unwrap();
        let q = "age related macular degeneration";
        let e = normalize_term(q, &g, Some(&idx), MatchMode::Exact).unwrap();
        let a = normalize_term(q, &g, Some(&idx), MatchMode::Approx).unwrap();
        assert_eq!(e, a);
        assert_eq!(e.concept, ConceptId::from("12"));
    }

    #[test]
    fn tie_breaks_on_smallest_id() {
        let g = OntologyGraph::from_concepts(vec![
            Concept::new("b", "red eye", &[]),
            Concept::new("a", "red skin", &[]),
        ])
        .unwrap();
        // "red" scores 0.5 against both
        let n = normalize_term("red", &g, None, MatchMode::Exact).unwrap();
        assert_eq!(n.concept, ConceptId::from("a"));
    }

    #[test]
    fn empty_graph_errors() {
        let g = OntologyGraph::from_concepts(vec![]).unwrap();
        assert!(matches!(normalize_term("x", &g, None, MatchMode::Exact), Err(OntologyError::EmptyOntology)));
    }

    #[test]
    fn normalizer_drops_zero_scores_and_falls_back() {
        let norm = Normalizer::new(toy(), LshParams::default(), 0.0).unwrap();
        let (set, pairs) = norm.normalize_all(["glaucoma", "zebra stripes"], MatchMode::Approx).unwrap();
        assert_eq!(set, ["13"].into_iter().collect());
        assert_eq!(pairs.len(), 1);
        assert!(matches!(norm.normalize("zebra", MatchMode::Approx), Err(OntologyError::NoCandidate(_))));
        assert_eq!(norm.normalize_with_fallback("eye", MatchMode::Approx).unwrap().concept, ConceptId::from("10"));
    }

    #[test]
    fn mean_similarity() {
        let g = toy();
        let all_exact = vec![("glaucoma".to_string(), "13".into()), ("eye disorder".to_string(), "10".into())];
        assert_eq!(mean_normalization_similarity(&all_exact, &g).unwrap(), 1.0);
        // "eye" vs "eye disorder" = 0.5, plus one exact pair
        let mixed = vec![("eye".to_string(), "10".into()), ("glaucoma".to_string(), "13".into())];
        assert_eq!(mean_normalization_similarity(&mixed, &g).unwrap(), 0.75);
        assert!(matches!(mean_normalization_similarity(&[], &g), Err(OntologyError::EmptyInput)));
    }
}
