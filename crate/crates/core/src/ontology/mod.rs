//! Is-a ontology: loading, term normalization and neighborhood expansion.

mod graph;
mod lsh;
mod normalize;
pub mod similarity;

use thiserror::Error;

pub use graph::{Concept, OntologyGraph};
pub use lsh::{LshParams, NnIndex};
pub use normalize::{mean_normalization_similarity, normalize_term, MatchMode, Normalization, Normalizer};
pub use similarity::{phrase_similarity, Shingling};

use crate::model::ConceptId;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("cycle detected through concept {0}")]
    CycleDetected(ConceptId),
    #[error("concept {concept} lists unknown parent {parent}")]
    DanglingParent { concept: ConceptId, parent: ConceptId },
    #[error("duplicate concept id {0}")]
    DuplicateId(ConceptId),
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptId),
    #[error("ontology is empty")]
    EmptyOntology,
    #[error("no LSH bucket collision for `{0}`")]
    NoCandidate(String),
    #[error("mean over an empty list is undefined")]
    EmptyInput,
    #[error("invalid LSH parameters: {0}")]
    InvalidParams(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
