//! Clinical-trial retrieval and eligibility re-ranking over typed attribute sets.

pub mod eval;
pub mod labeling;
pub mod model;
pub mod ontology;
pub mod pipeline;
pub mod records;
pub mod rerank;
pub mod retrieval;
pub mod text;
