use std::collections::{HashMap, HashSet, VecDeque};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::OntologyError;
use crate::model::{ConceptId, ConceptSet};

/// One line of the ontology JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    pub label: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    #[serde(default)]
    pub parents: Vec<ConceptId>,
}

impl Concept {
    pub fn new(id: &str, label: &str, parents: &[&str]) -> Self {
        Self {
            id: ConceptId::from(id),
            label: label.to_string(),
            synonyms: Vec::new(),
            parents: parents.iter().map(|p| ConceptId::from(*p)).collect(),
        }
    }

    pub fn with_synonyms(mut self, syns: &[&str]) -> Self {
        self.synonyms = syns.iter().map(|s| s.to_string()).collect();
        self
    }

    /// Preferred label followed by synonyms.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.label.as_str()).chain(self.synonyms.iter().map(String::as_str))
    }
}

/// Validated is-a DAG. Concepts are stored in ascending id order and
/// addressed internally by dense index.
#[derive(Debug, Clone)]
pub struct OntologyGraph {
    concepts: Vec<Concept>,
    index: HashMap<ConceptId, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    roots: Vec<usize>,
    depth: Vec<u32>,
}

impl OntologyGraph {
    /// Validates ids, parent references and acyclicity, then caches depths.
    pub fn from_concepts(mut concepts: Vec<Concept>) -> Result<Self, OntologyError> {
        concepts.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::with_capacity(concepts.len());
        for (i, c) in concepts.iter().enumerate() {
            if index.insert(c.id.clone(), i).is_some() {
                return Err(OntologyError::DuplicateId(c.id.clone()));
            }
        }

        let n = concepts.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (i, c) in concepts.iter().enumerate() {
            let mut seen = HashSet::new();
            for p in &c.parents {
                if p == &c.id {
                    return Err(OntologyError::CycleDetected(c.id.clone()));
                }
                let &pi = index
                    .get(p)
                    .ok_or_else(|| OntologyError::DanglingParent { concept: c.id.clone(), parent: p.clone() })?;
                if seen.insert(pi) {
                    parents[i].push(pi);
                    children[pi].push(i);
                }
            }
        }

        // Kahn's algorithm from the roots downwards; leftovers sit on a cycle.
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let roots: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut queue: VecDeque<usize> = roots.iter().copied().collect();
        let mut visited = 0;
        while let Some(u) = queue.pop_front() {
            visited += 1;
            for &c in &children[u] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if visited < n {
            let culprit = (0..n).find(|&i| indegree[i] > 0).expect("unvisited node");
            return Err(OntologyError::CycleDetected(concepts[culprit].id.clone()));
        }

        // shortest distance to any root: multi-source BFS along child edges
        let mut depth = vec![u32::MAX; n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &r in &roots {
            depth[r] = 0;
            queue.push_back(r);
        }
        while let Some(u) = queue.pop_front() {
            for &c in &children[u] {
                if depth[c] == u32::MAX {
                    depth[c] = depth[u] + 1;
                    queue.push_back(c);
                }
            }
        }

        Ok(Self { concepts, index, parents, children, roots, depth })
    }

    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, OntologyError> {
        let mut concepts = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let c: Concept = serde_json::from_str(&line)
                .map_err(|e| OntologyError::Parse { line: lineno + 1, message: e.to_string() })?;
            concepts.push(c);
        }
        Self::from_concepts(concepts)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OntologyError> {
        let f = std::fs::File::open(path)?;
        Self::from_jsonl(std::io::BufReader::new(f))
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn get(&self, id: &ConceptId) -> Option<&Concept> {
        self.index.get(id).map(|&i| &self.concepts[i])
    }

    pub fn contains(&self, id: &ConceptId) -> bool {
        self.index.contains_key(id)
    }

    pub fn roots(&self) -> impl Iterator<Item = &ConceptId> {
        self.roots.iter().map(|&i| &self.concepts[i].id)
    }

    pub fn children_of(&self, id: &ConceptId) -> Result<Vec<&ConceptId>, OntologyError> {
        let i = self.idx(id)?;
        Ok(self.children[i].iter().map(|&c| &self.concepts[c].id).collect())
    }

    fn idx(&self, id: &ConceptId) -> Result<usize, OntologyError> {
        self.index.get(id).copied().ok_or_else(|| OntologyError::UnknownConcept(id.clone()))
    }

    /// Hop distances from `id` along is-a edges in either direction,
    /// up to `max_hops`.
    pub fn hop_distances(&self, id: &ConceptId, max_hops: u32) -> Result<Vec<(ConceptId, u32)>, OntologyError> {
        let start = self.idx(id)?;
        let mut dist: HashMap<usize, u32> = HashMap::new();
        dist.insert(start, 0);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if d == max_hops {
                continue;
            }
            for &v in self.parents[u].iter().chain(self.children[u].iter()) {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                    e.insert(d + 1);
                    queue.push_back(v);
                }
            }
        }
        let mut out: Vec<(ConceptId, u32)> =
            dist.into_iter().map(|(i, d)| (self.concepts[i].id.clone(), d)).collect();
        out.sort();
        Ok(out)
    }

    /// n-level relevance neighborhood: every concept within `n` is-a hops of
    /// `t`, following edges towards parents and children alike. Always
    /// contains `t`.
    pub fn expand_neighborhood(&self, t: &ConceptId, n: u32) -> Result<ConceptSet, OntologyError> {
        Ok(self.hop_distances(t, n)?.into_iter().map(|(id, _)| id).collect())
    }

    /// Union of the n-level neighborhoods of every member.
    pub fn expand_diagnosis(&self, d_norm: &ConceptSet, n: u32) -> Result<ConceptSet, OntologyError> {
        let mut out = ConceptSet::new();
        for id in d_norm.iter() {
            out.extend(&self.expand_neighborhood(id, n)?);
        }
        Ok(out)
    }

    /// Number of is-a edges on the shortest path from `t` up to a root.
    pub fn concept_depth(&self, t: &ConceptId) -> Result<u32, OntologyError> {
        Ok(self.depth[self.idx(t)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> OntologyGraph {
        OntologyGraph::from_concepts(vec![
            Concept::new("a", "alpha", &[]),
            Concept::new("b", "beta", &["a"]),
            Concept::new("c", "gamma", &["b"]),
        ])
        .unwrap()
    }

    #[test]
    fn chain_roots_and_depth() {
        let g = chain();
        assert_eq!(g.roots().cloned().collect::<Vec<_>>(), vec![ConceptId::from("a")]);
        assert_eq!(g.concept_depth(&"a".into()).unwrap(), 0);
        assert_eq!(g.concept_depth(&"c".into()).unwrap(), 2);
    }

    #[test]
    fn load_errors() {
        let dangling = OntologyGraph::from_concepts(vec![Concept::new("c", "x", &["zzz"])]);
        assert!(matches!(dangling, Err(OntologyError::DanglingParent { .. })));
        let dup = OntologyGraph::from_concepts(vec![Concept::new("a", "x", &[]), Concept::new("a", "y", &[])]);
        assert!(matches!(dup, Err(OntologyError::DuplicateId(_))));
        let cyc = OntologyGraph::from_concepts(vec![
            Concept::new("a", "x", &["c"]),
            Concept::new("b", "y", &["a"]),
            Concept::new("c", "z", &["b"]),
        ]);
        assert!(matches!(cyc, Err(OntologyError::CycleDetected(_))));
        let selfp = OntologyGraph::from_concepts(vec![Concept::new("a", "x", &["a"])]);
        assert!(matches!(selfp, Err(OntologyError::CycleDetected(_))));
    }

    #[test]
    fn jsonl_parse() {
        let src = r#"{"id":"a","label":"alpha","synonyms":[],"parents":[]}

{"id":"b","label":"beta","synonyms":["b syn"],"parents":["a"]}
"#;
        let g = OntologyGraph::from_jsonl(src.as_bytes()).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.get(&"b".into()).unwrap().synonyms, vec!["b syn".to_string()]);
        let bad = OntologyGraph::from_jsonl("{\"id\":1}".as_bytes());
        assert!(matches!(bad, Err(OntologyError::Parse { line: 1, .. })));
    }

    #[test]
    fn neighborhood_levels() {
        let g = chain();
        assert_eq!(g.expand_neighborhood(&"b".into(), 0).unwrap(), ["b"].into_iter().collect());
        assert_eq!(g.expand_neighborhood(&"b".into(), 1).unwrap(), ["a", "b", "c"].into_iter().collect());
        assert!(matches!(g.expand_neighborhood(&"q".into(), 1), Err(OntologyError::UnknownConcept(_))));
    }

    #[test]
    fn expand_diagnosis_shares_parent() {
        let g = OntologyGraph::from_concepts(vec![
            Concept::new("p", "parent", &[]),
            Concept::new("x", "left", &["p"]),
            Concept::new("y", "right", &["p"]),
        ])
        .unwrap();
        let d: ConceptSet = ["x", "y"].into_iter().collect();
        let e = g.expand_diagnosis(&d, 1).unwrap();
        assert_eq!(e, ["p", "x", "y"].into_iter().collect());
        assert_eq!(g.expand_diagnosis(&ConceptSet::new(), 3).unwrap(), ConceptSet::new());
        let single: ConceptSet = ["x"].into_iter().collect();
        assert_eq!(g.expand_diagnosis(&single, 0).unwrap(), single);
    }
}
