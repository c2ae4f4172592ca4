//! End-to-end orchestration, persistence and experiment drivers.

mod analysis;
pub mod benchmark;
mod config;
mod run;
mod store;

use std::fmt;
use std::path::{Path, PathBuf};

pub use analysis::{
    depth_analysis, retrieval_quality, sweep_n_level, sweep_tsv, DepthAnalysis, DepthPoint, SweepRow, TopicRetrieval,
};
pub use config::{ExtractionMode, FirstStage, LabelerConfig, LabelerKind, PipelineConfig};
pub use run::{
    build_labeler, create_run_dir, run_pipeline, write_outputs, Failure, IngestSummary, Pipeline, PipelineOutput,
    TopicResult,
};
pub use store::{content_key, CorpusStore, ExtractionProvenance};

/// Pipeline stage named in errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Extract,
    Normalize,
    Retrieve,
    Label,
    Rerank,
    Evaluate,
    Analyze,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Normalize => "normalize",
            Stage::Retrieve => "retrieve",
            Stage::Label => "label",
            Stage::Rerank => "rerank",
            Stage::Evaluate => "evaluate",
            Stage::Analyze => "analyze",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{stage} stage{}: {source}", if subject.is_empty() { String::new() } else { format!(" ({subject})") })]
    Stage {
        stage: Stage,
        subject: String,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), source }
    }

    pub fn stage(stage: Stage, subject: &str, source: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        PipelineError::Stage { stage, subject: subject.to_string(), source: source.into() }
    }

    pub fn stage_name(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}
