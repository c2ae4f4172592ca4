//! Retrieval experiments: expansion-level sweeps and diagnosis-depth analysis.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::run::Pipeline;
use super::PipelineError;
use crate::eval::{pearson_r, EvalError, Qrels};
use crate::model::{ConceptSet, PatientProfile};
use crate::ontology::OntologyGraph;

/// Retrieval quality of one topic's condition-relevant set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRetrieval {
    pub topic: String,
    pub diagnosis: ConceptSet,
    pub retrieved: usize,
    /// `None` when the topic has no relevant trials.
    pub recall: Option<f64>,
    /// 0 when nothing was retrieved.
    pub precision: f64,
}

/// Recall and precision of a retrieved id set against graded judgments.
pub fn retrieval_quality<'a>(
    topic: &str,
    diagnosis: &ConceptSet,
    retrieved: impl IntoIterator<Item = &'a str>,
    qrels: &Qrels,
    threshold: u8,
) -> TopicRetrieval {
    let ret: HashSet<&str> = retrieved.into_iter().collect();
    let rel: HashSet<&str> = qrels
        .topic(topic)
        .map(|j| j.iter().filter(|(_, &g)| g >= threshold).map(|(k, _)| k.as_str()).collect())
        .unwrap_or_default();
    let hit = ret.iter().filter(|id| rel.contains(*id)).count();
    TopicRetrieval {
        topic: topic.to_string(),
        diagnosis: diagnosis.clone(),
        retrieved: ret.len(),
        recall: (!rel.is_empty()).then(|| hit as f64 / rel.len() as f64),
        precision: if ret.is_empty() { 0.0 } else { hit as f64 / ret.len() as f64 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub level: u32,
    /// Mean over topics with at least one relevant trial.
    pub recall: f64,
    pub precision: f64,
    pub mean_ctrs: f64,
}

impl Pipeline {
    /// Condition-relevant retrieval (first stage cut to K, no filter) at
    /// expansion level `n` for each patient.
    pub fn retrieval_at_level(
        &self,
        patients: &[PatientProfile],
        n: u32,
        qrels: &Qrels,
        threshold: u8,
    ) -> Result<Vec<TopicRetrieval>, PipelineError> {
        patients
            .iter()
            .map(|p| {
                let p = self.expand(p, n)?;
                let mut ranked = self.rank_all(&p);
                ranked.truncate(self.config().first_stage_k);
                Ok(retrieval_quality(&p.id, &p.diagnosis_norm, ranked.ids(), qrels, threshold))
            })
            .collect()
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// One retrieval pass per level; `threshold` is the minimum relevant grade.
pub fn sweep_n_level(
    pipeline: &Pipeline,
    patients: &[PatientProfile],
    qrels: &Qrels,
    levels: &[u32],
    threshold: u8,
) -> Result<Vec<SweepRow>, PipelineError> {
    if levels.is_empty() {
        return Err(PipelineError::Config("no levels to sweep".into()));
    }
    levels
        .iter()
        .map(|&level| {
            let rows = pipeline.retrieval_at_level(patients, level, qrels, threshold)?;
            let recalls: Vec<f64> = rows.iter().filter_map(|r| r.recall).collect();
            let precisions: Vec<f64> = rows.iter().map(|r| r.precision).collect();
            let sizes: Vec<f64> = rows.iter().map(|r| r.retrieved as f64).collect();
            Ok(SweepRow { level, recall: mean(&recalls), precision: mean(&precisions), mean_ctrs: mean(&sizes) })
        })
        .collect()
}

pub fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("level\trecall\tprecision\tmean_ctrs\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{:.6}\t{:.6}\t{:.3}", r.level, r.recall, r.precision, r.mean_ctrs);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthPoint {
    pub topic: String,
    /// Mean depth of the topic's normalized diagnoses.
    pub depth: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthAnalysis {
    /// `None` when either series is constant or there are fewer than two points.
    pub recall_r: Option<f64>,
    pub precision_r: Option<f64>,
    pub points: Vec<DepthPoint>,
}

impl DepthAnalysis {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("topic\tdepth\trecall\tprecision\n");
        for p in &self.points {
            let _ = writeln!(out, "{}\t{:.3}\t{:.6}\t{:.6}", p.topic, p.depth, p.recall, p.precision);
        }
        out
    }
}

/// Correlates per-topic recall and precision with diagnosis depth. Topics
/// without a normalized diagnosis or without relevant trials are skipped.
pub fn depth_analysis(results: &[TopicRetrieval], g: &OntologyGraph) -> Result<DepthAnalysis, PipelineError> {
    let mut points = Vec::new();
    for r in results {
        let Some(recall) = r.recall else { continue };
        if r.diagnosis.is_empty() {
            continue;
        }
        let depths = r
            .diagnosis
            .iter()
            .map(|c| g.concept_depth(c).map(f64::from))
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| PipelineError::stage(super::Stage::Analyze, &r.topic, e))?;
        points.push(DepthPoint { topic: r.topic.clone(), depth: mean(&depths), recall, precision: r.precision });
    }
    let depth: Vec<f64> = points.iter().map(|p| p.depth).collect();
    let rec: Vec<f64> = points.iter().map(|p| p.recall).collect();
    let prec: Vec<f64> = points.iter().map(|p| p.precision).collect();
    let corr = |y: &[f64]| -> Result<Option<f64>, PipelineError> {
        match pearson_r(&depth, y) {
            Ok(r) => Ok(Some(r)),
            Err(EvalError::ZeroVariance) => Ok(None),
            Err(e) => Err(PipelineError::stage(super::Stage::Analyze, "", e)),
        }
    };
    Ok(DepthAnalysis { recall_r: corr(&rec)?, precision_r: corr(&prec)?, points })
}
