//! Pipeline configuration, read from a TOML file plus `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::eval::EvalConfig;
use crate::labeling::HttpConfig;
use crate::ontology::{LshParams, MatchMode};
use crate::rerank::{CategoryCounting, GateMode, RerankConfig, ScoringMethod};
use crate::retrieval::Bm25Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FirstStage {
    /// Overlap coefficient over expanded diagnoses.
    #[default]
    Condition,
    /// BM25 of the patient note against trial text.
    Bm25,
}

/// When criteria are categorized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractionMode {
    /// Only for candidates that get labeled.
    #[default]
    Lazy,
    /// For every trial at ingestion.
    Eager,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelerKind {
    #[default]
    RuleMock,
    /// Rule mock with a fraction of fine and coarse labels flipped.
    Noisy,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelerConfig {
    pub kind: LabelerKind,
    pub noise_rate: f64,
    /// JSONL label cache; relative paths resolve against the output directory.
    pub cache: Option<PathBuf>,
    pub http: HttpConfig,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        Self { kind: LabelerKind::RuleMock, noise_rate: 0.1, cache: Some("labels.jsonl".into()), http: HttpConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub ontology: PathBuf,
    pub corpus: PathBuf,
    pub topics: PathBuf,
    pub qrels: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/store`.
    pub store_dir: Option<PathBuf>,
    /// Seeds LSH permutations and label noise.
    pub seed: u64,
    pub n_level: u32,
    pub first_stage: FirstStage,
    pub first_stage_k: usize,
    pub rerank_k: usize,
    pub demographic_filter: bool,
    pub method: ScoringMethod,
    pub gate: GateMode,
    pub category_counting: CategoryCounting,
    /// Ask for coarse labels even when the method does not use them.
    pub always_coarse: bool,
    pub extraction: ExtractionMode,
    pub match_mode: MatchMode,
    /// Normalizations scoring below this are dropped.
    pub min_similarity: f64,
    /// Topic worker threads; 0 uses every core.
    pub workers: usize,
    pub labeler: LabelerConfig,
    pub lsh: LshParams,
    pub bm25: Bm25Params,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            ontology: "ontology.jsonl".into(),
            corpus: "trials.jsonl".into(),
            topics: "topics.jsonl".into(),
            qrels: None,
            output_dir: "runs".into(),
            store_dir: None,
            seed: 42,
            n_level: 1,
            first_stage: FirstStage::Condition,
            first_stage_k: 500,
            rerank_k: 25,
            demographic_filter: true,
            method: ScoringMethod::Hybrid,
            gate: GateMode::Lenient,
            category_counting: CategoryCounting::PerCategory,
            always_coarse: false,
            extraction: ExtractionMode::Lazy,
            match_mode: MatchMode::Approx,
            min_similarity: 0.0,
            workers: 0,
            labeler: LabelerConfig::default(),
            lsh: LshParams::default(),
            bm25: Bm25Params::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets a dotted key such as `labeler.noise_rate` in a TOML table.
fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), PipelineError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| PipelineError::Config(format!("bad key `{key}`")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| PipelineError::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl PipelineConfig {
    /// Parses TOML text; relative paths stay relative.
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        Self::from_toml_with(text, &[])
    }

    /// Parses TOML text after applying `key=value` overrides. Values are read
    /// as TOML literals when they parse as one, else as strings.
    pub fn from_toml_with(text: &str, overrides: &[(String, String)]) -> Result<Self, PipelineError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        for (k, v) in overrides {
            set_dotted(&mut table, k, parse_override_value(v))?;
        }
        table.try_into().map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))
    }

    /// Loads a config file, applies overrides, and resolves relative paths
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>, overrides: &[(String, String)]) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg = Self::from_toml_with(&text, overrides)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.ontology);
        fix(&mut self.corpus);
        fix(&mut self.topics);
        fix(&mut self.output_dir);
        if let Some(q) = self.qrels.as_mut() {
            fix(q);
        }
        if let Some(s) = self.store_dir.as_mut() {
            fix(s);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn store_path(&self) -> PathBuf {
        self.store_dir.clone().unwrap_or_else(|| self.output_dir.join("store"))
    }

    pub fn cache_path(&self) -> Option<PathBuf> {
        self.labeler.cache.as_ref().map(|c| if c.is_relative() { self.output_dir.join(c) } else { c.clone() })
    }

    pub fn rerank_config(&self) -> RerankConfig {
        RerankConfig { method: self.method, gate: self.gate, counting: self.category_counting }
    }

    /// LSH parameters with the permutation seed taken from `seed`.
    pub fn lsh_params(&self) -> LshParams {
        LshParams { seed: self.seed, ..self.lsh }
    }

    /// Checks numeric ranges and that input files exist.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        for (name, p) in [("ontology", &self.ontology), ("corpus", &self.corpus), ("topics", &self.topics)] {
            if !p.is_file() {
                return bad(format!("{name} file {} not found", p.display()));
            }
        }
        if let Some(q) = &self.qrels {
            if !q.is_file() {
                return bad(format!("qrels file {} not found", q.display()));
            }
        }
        if self.first_stage_k == 0 || self.rerank_k == 0 {
            return bad("first_stage_k and rerank_k must be at least 1".into());
        }
        if self.n_level > 16 {
            return bad(format!("n_level {} exceeds 16", self.n_level));
        }
        if !(0.0..=1.0).contains(&self.min_similarity) {
            return bad(format!("min_similarity {} outside [0, 1]", self.min_similarity));
        }
        if !(0.0..=1.0).contains(&self.labeler.noise_rate) {
            return bad(format!("labeler.noise_rate {} outside [0, 1]", self.labeler.noise_rate));
        }
        if !matches!(self.eval.rel_threshold, 1 | 2) {
            return bad(format!("eval.rel_threshold must be 1 or 2, got {}", self.eval.rel_threshold));
        }
        self.lsh.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }
}
