//! Staged execution: ingest, extract, retrieve, filter, label, rerank, evaluate.

use std::collections::HashMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExtractionMode, FirstStage, LabelerKind, PipelineConfig};
use super::store::{content_key, CorpusStore, ExtractionProvenance};
use super::{PipelineError, Stage};
use crate::eval::{evaluate_run, MetricReport, Qrels, RunFile};
use crate::labeling::{
    categorize_criteria, extract_patient, extract_trial, judge_trial, CachingLabeler, HttpChatBackend, LabelCache,
    Labeler, NoisyLabeler, PromptLabeler, RuleMock, TemplateName,
};
use crate::model::{PatientProfile, TrialRecord};
use crate::ontology::{Normalizer, OntologyGraph};
use crate::records::{read_jsonl, RawTopic, RawTrial};
use crate::rerank::{rerank, CandidateEvidence, RerankConfig, Reranking, Relevance};
use crate::retrieval::{backfill_to_k, demographic_filter, RankedList, TextIndex};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub total: usize,
    /// Newly extracted and written.
    pub stored: usize,
    /// Found in the store.
    pub reused: usize,
    pub failed: usize,
}

/// Everything computed for one topic.
#[derive(Debug, Clone)]
pub struct TopicResult {
    pub topic: String,
    /// Profile with diagnoses expanded to the configured level.
    pub patient: PatientProfile,
    /// First-stage ranking cut to `first_stage_k`.
    pub first_stage: RankedList,
    /// Filtered and backfilled list handed to re-ranking.
    pub candidates: RankedList,
    pub evidence: HashMap<String, CandidateEvidence>,
    pub reranking: Reranking,
}

/// Topic id and error message.
pub type Failure = (String, String);

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub run: RunFile,
    pub report: Option<MetricReport>,
    pub topics: Vec<TopicResult>,
    /// Topics that failed, with the error text.
    pub failures: Vec<Failure>,
}

/// Builds the labeler named by the config, wrapped in the label cache when
/// one is configured.
pub fn build_labeler(cfg: &PipelineConfig) -> Result<Arc<dyn Labeler>, PipelineError> {
    let base: Box<dyn Labeler> = match cfg.labeler.kind {
        LabelerKind::RuleMock => Box::new(RuleMock::new()),
        LabelerKind::Noisy => Box::new(NoisyLabeler::new(RuleMock::new(), cfg.labeler.noise_rate, cfg.seed)),
        LabelerKind::Http => {
            let backend = HttpChatBackend::new(cfg.labeler.http.clone())
                .map_err(|e| PipelineError::stage(Stage::Label, "", e))?;
            Box::new(PromptLabeler::new(backend))
        }
    };
    Ok(match cfg.cache_path() {
        Some(path) => {
            let cache = LabelCache::open(&path).map_err(|e| PipelineError::stage(Stage::Label, "", e))?;
            Arc::new(CachingLabeler::new(base, Arc::new(cache)))
        }
        None => Arc::from(base),
    })
}

/// Parsed records plus the number of unreadable lines, which are logged.
fn read_file_counted<T: serde::de::DeserializeOwned>(path: &Path, stage: Stage) -> Result<(Vec<T>, usize), PipelineError> {
    let f = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let (items, errors) = read_jsonl(BufReader::new(f)).map_err(|e| PipelineError::io(path, e))?;
    for e in &errors {
        log::warn!("{stage}: {}:{}: {}", path.display(), e.line, e.message);
    }
    Ok((items, errors.len()))
}

fn read_file<T: serde::de::DeserializeOwned>(path: &Path, stage: Stage) -> Result<Vec<T>, PipelineError> {
    read_file_counted(path, stage).map(|r| r.0)
}

pub struct Pipeline {
    cfg: PipelineConfig,
    labeler: Arc<dyn Labeler>,
    normalizer: Normalizer,
    normalizer_id: String,
    store: CorpusStore,
    trials: HashMap<String, TrialRecord>,
    condition_index: crate::retrieval::ConditionIndex,
    text_index: Option<TextIndex>,
    ingest: IngestSummary,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    /// Builds the labeler from the config and prepares the pipeline.
    pub fn from_config(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        let lb = build_labeler(&cfg)?;
        Self::new(cfg, lb)
    }

    /// Loads the ontology, ingests the corpus into the store (reusing stored
    /// records) and builds the first-stage indexes.
    pub fn new(cfg: PipelineConfig, labeler: Arc<dyn Labeler>) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let onto_bytes = std::fs::read(&cfg.ontology).map_err(|e| PipelineError::io(&cfg.ontology, e))?;
        let graph = OntologyGraph::from_jsonl(onto_bytes.as_slice())
            .map_err(|e| PipelineError::stage(Stage::Normalize, "", e))?;
        let lsh = cfg.lsh_params();
        let normalizer_id = content_key(&[
            &String::from_utf8_lossy(&onto_bytes),
            &serde_json::to_string(&lsh).expect("params serialize"),
            &format!("{:?}/{}", cfg.match_mode, cfg.min_similarity),
        ]);
        let normalizer =
            Normalizer::new(graph, lsh, cfg.min_similarity).map_err(|e| PipelineError::stage(Stage::Normalize, "", e))?;
        let store = CorpusStore::open(cfg.store_path())?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let mut p = Self {
            cfg,
            labeler,
            normalizer,
            normalizer_id,
            store,
            trials: HashMap::new(),
            condition_index: Default::default(),
            text_index: None,
            ingest: IngestSummary::default(),
            pool,
        };
        let (raw, unreadable) = read_file_counted::<RawTrial>(&p.cfg.corpus, Stage::Ingest)?;
        let (mut summary, records) = p.pool.install(|| p.ingest_corpus(&raw));
        summary.total += unreadable;
        summary.failed += unreadable;
        p.ingest = summary;
        log::info!(
            "ingest: {} trials, {} stored, {} reused, {} failed",
            summary.total, summary.stored, summary.reused, summary.failed
        );
        p.condition_index = crate::retrieval::ConditionIndex::build(&records);
        if p.cfg.first_stage == FirstStage::Bm25 {
            p.text_index = Some(TextIndex::build(records.iter().map(|r| (r.id.as_str(), r.raw_text.as_str())), p.cfg.bm25));
        }
        p.trials = records.into_iter().map(|r| (r.id.clone(), r)).collect();
        Ok(p)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn labeler(&self) -> &Arc<dyn Labeler> {
        &self.labeler
    }

    pub fn graph(&self) -> &OntologyGraph {
        self.normalizer.graph()
    }

    pub fn store(&self) -> &CorpusStore {
        &self.store
    }

    pub fn trials(&self) -> &HashMap<String, TrialRecord> {
        &self.trials
    }

    pub fn ingest_summary(&self) -> IngestSummary {
        self.ingest
    }

    fn provenance(&self, templates: &[TemplateName]) -> ExtractionProvenance {
        ExtractionProvenance {
            labeler: self.labeler.id(),
            template_hashes: templates.iter().map(|t| t.template().hash().to_string()).collect(),
            normalizer: self.normalizer_id.clone(),
        }
    }

    fn trial_provenance(&self) -> ExtractionProvenance {
        match self.cfg.extraction {
            ExtractionMode::Eager => self.provenance(&[TemplateName::CriterionCategorization]),
            ExtractionMode::Lazy => self.provenance(&[]),
        }
    }

    /// Extracts and normalizes every raw trial not already stored. Records
    /// that fail are logged and skipped.
    pub fn ingest_corpus(&self, raw: &[RawTrial]) -> (IngestSummary, Vec<TrialRecord>) {
        let prov = self.trial_provenance();
        let fp = prov.fingerprint();
        let eager = self.cfg.extraction == ExtractionMode::Eager;
        let results: Vec<Result<(TrialRecord, bool), PipelineError>> = raw
            .par_iter()
            .map(|r| {
                let key = content_key(&[&serde_json::to_string(r).expect("serializable"), &fp]);
                if let Some(t) = self.store.trial(&key) {
                    return Ok((t, false));
                }
                let mut t = extract_trial(r, &*self.labeler, eager)
                    .map_err(|e| PipelineError::stage(Stage::Ingest, &r.id, e))?;
                let (norm, _) = self
                    .normalizer
                    .normalize_all(t.condition_raw.iter(), self.cfg.match_mode)
                    .map_err(|e| PipelineError::stage(Stage::Normalize, &r.id, e))?;
                t.condition_norm = norm;
                self.store.put_trial(&key, &prov, &t)?;
                Ok((t, true))
            })
            .collect();
        let mut summary = IngestSummary { total: raw.len(), ..Default::default() };
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for r in results {
            match r {
                Ok((t, fresh)) => {
                    if fresh {
                        summary.stored += 1;
                    } else {
                        summary.reused += 1;
                    }
                    if seen.insert(t.id.clone()) {
                        out.push(t);
                    } else {
                        log::warn!("ingest: duplicate trial id {}; keeping the first", t.id);
                    }
                }
                Err(e) => {
                    log::warn!("{e}");
                    summary.failed += 1;
                }
            }
        }
        (summary, out)
    }

    /// Extracts and normalizes one patient, reusing the stored profile.
    /// Diagnoses are not expanded.
    pub fn extract_topic(&self, topic: &RawTopic) -> Result<PatientProfile, PipelineError> {
        let prov = self.provenance(&[TemplateName::PatientExtraction]);
        let key = content_key(&[&topic.id, &topic.note, &prov.fingerprint()]);
        if let Some(p) = self.store.patient(&key) {
            return Ok(p);
        }
        let mut p = extract_patient(&topic.id, &topic.note, &*self.labeler)
            .map_err(|e| PipelineError::stage(Stage::Extract, &topic.id, e))?;
        // fall back to disease phrases when no diagnosis was extracted
        let phrases: Vec<&str> =
            if p.diagnosis_raw.is_empty() { p.disease.iter().collect() } else { p.diagnosis_raw.iter().collect() };
        let (norm, _) = self
            .normalizer
            .normalize_all(phrases, self.cfg.match_mode)
            .map_err(|e| PipelineError::stage(Stage::Normalize, &topic.id, e))?;
        p.diagnosis_norm = norm;
        self.store.put_patient(&key, &prov, &p)?;
        Ok(p)
    }

    pub fn read_topics(&self) -> Result<Vec<RawTopic>, PipelineError> {
        read_file(&self.cfg.topics, Stage::Extract)
    }

    /// Extracts every topic in parallel; failures are returned alongside.
    pub fn extract_topics(&self) -> Result<(Vec<PatientProfile>, Vec<Failure>), PipelineError> {
        let topics = self.read_topics()?;
        let results: Vec<_> =
            self.pool.install(|| topics.par_iter().map(|t| (t.id.clone(), self.extract_topic(t))).collect());
        let mut ok = Vec::new();
        let mut failed = Vec::new();
        for (id, r) in results {
            match r {
                Ok(p) => ok.push(p),
                Err(e) => {
                    log::warn!("{e}");
                    failed.push((id, e.to_string()));
                }
            }
        }
        Ok((ok, failed))
    }

    /// A copy of the profile with diagnoses expanded `n` hops.
    pub fn expand(&self, p: &PatientProfile, n: u32) -> Result<PatientProfile, PipelineError> {
        let mut p = p.clone();
        p.diagnosis_expanded = self
            .graph()
            .expand_diagnosis(&p.diagnosis_norm, n)
            .map_err(|e| PipelineError::stage(Stage::Normalize, &p.id, e))?;
        Ok(p)
    }

    /// Full first-stage ranking (uncut) for an expanded profile.
    pub fn rank_all(&self, p: &PatientProfile) -> RankedList {
        match (&self.text_index, self.cfg.first_stage) {
            (Some(idx), FirstStage::Bm25) => {
                RankedList::from_scores(idx.scores(&p.note_text), crate::retrieval::Provenance::TextMatch)
            }
            _ => self.condition_index.rank_all(&p.diagnosis_expanded),
        }
    }

    /// First-stage list cut to K, then the demographic filter and backfill.
    pub fn candidates(&self, p: &PatientProfile) -> (RankedList, RankedList) {
        let full = self.rank_all(p);
        let mut first = full.clone();
        first.truncate(self.cfg.first_stage_k);
        let cands = if self.cfg.demographic_filter {
            let filtered = demographic_filter(&first, p, &self.trials);
            backfill_to_k(&filtered, &full, p, &self.trials, self.cfg.rerank_k)
        } else {
            let mut c = first.clone();
            c.truncate(self.cfg.rerank_k);
            c
        };
        (first, cands)
    }

    fn with_coarse(&self, rc: &RerankConfig) -> bool {
        self.cfg.always_coarse || rc.method.needs_coarse()
    }

    /// Fine (and when needed coarse) labels for every candidate.
    pub fn label_candidates(
        &self,
        p: &PatientProfile,
        cands: &RankedList,
        with_coarse: bool,
    ) -> Result<HashMap<String, CandidateEvidence>, PipelineError> {
        cands
            .entries()
            .par_iter()
            .map(|e| {
                let stored = self.trials.get(&e.trial_id).ok_or_else(|| {
                    PipelineError::stage(Stage::Label, &p.id, format!("unknown trial {}", e.trial_id))
                })?;
                let mut trial = stored.clone();
                if !trial.is_fully_categorized() {
                    categorize_criteria(&trial.id, &mut trial.criteria, &*self.labeler)
                        .map_err(|err| PipelineError::stage(Stage::Label, &p.id, err))?;
                }
                let judgments = judge_trial(p, &trial, &*self.labeler, with_coarse)
                    .map_err(|err| PipelineError::stage(Stage::Label, &p.id, err))?;
                Ok((e.trial_id.clone(), CandidateEvidence { relevance: Relevance::of(p, &trial), judgments }))
            })
            .collect()
    }

    /// Runs retrieval, labeling and re-ranking for one extracted patient.
    pub fn process_patient(&self, patient: &PatientProfile) -> Result<TopicResult, PipelineError> {
        let rc = self.cfg.rerank_config();
        let p = self.expand(patient, self.cfg.n_level)?;
        let (first_stage, candidates) = self.candidates(&p);
        let evidence = if rc.method.is_gated() {
            self.label_candidates(&p, &candidates, self.with_coarse(&rc))?
        } else {
            HashMap::new()
        };
        let reranking = rerank(&candidates, &evidence, &rc).map_err(|e| PipelineError::stage(Stage::Rerank, &p.id, e))?;
        Ok(TopicResult { topic: p.id.clone(), patient: p, first_stage, candidates, evidence, reranking })
    }

    pub fn load_qrels(&self) -> Result<Option<Qrels>, PipelineError> {
        let Some(path) = &self.cfg.qrels else { return Ok(None) };
        let f = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
        Qrels::parse(BufReader::new(f)).map(Some).map_err(|e| PipelineError::stage(Stage::Evaluate, "", e))
    }

    /// Every topic end to end. Failing topics are logged and left out of
    /// the run file.
    pub fn run(&self) -> Result<PipelineOutput, PipelineError> {
        let (patients, mut failures) = self.extract_topics()?;
        let results: Vec<_> = self.pool.install(|| patients.par_iter().map(|p| self.process_patient(p)).collect());
        let mut topics = Vec::new();
        for (p, r) in patients.iter().zip(results) {
            match r {
                Ok(t) => topics.push(t),
                Err(e) => {
                    log::warn!("{e}");
                    failures.push((p.id.clone(), e.to_string()));
                }
            }
        }
        let run = self.run_file(&topics, |t| &t.reranking.ranked, &self.cfg.method.to_string())?;
        let report = self.evaluate(&run)?;
        Ok(PipelineOutput { run, report, topics, failures })
    }

    /// Re-ranks stored results under another configuration. Coarse labels
    /// are fetched for methods that need them and were not labeled yet.
    pub fn rescore(&self, results: &[TopicResult], rc: &RerankConfig) -> Result<RunFile, PipelineError> {
        let reranked: Vec<Result<(String, RankedList), PipelineError>> = self.pool.install(|| {
            results
                .par_iter()
                .map(|t| {
                    let missing_coarse = rc.method.needs_coarse() && t.evidence.values().any(|e| e.judgments.coarse.is_none());
                    let relabeled;
                    let evidence = if rc.method.is_gated() && (t.evidence.len() < t.candidates.len() || missing_coarse) {
                        relabeled = self.label_candidates(&t.patient, &t.candidates, true)?;
                        &relabeled
                    } else {
                        &t.evidence
                    };
                    let r = rerank(&t.candidates, evidence, rc)
                        .map_err(|e| PipelineError::stage(Stage::Rerank, &t.topic, e))?;
                    Ok((t.topic.clone(), r.ranked))
                })
                .collect()
        });
        let mut run = RunFile::new();
        for r in reranked {
            let (topic, ranked) = r?;
            run.push_ranked(&topic, &ranked, &rc.method.to_string())
                .map_err(|e| PipelineError::stage(Stage::Rerank, &topic, e))?;
        }
        Ok(run)
    }

    /// Run file of one list per topic.
    pub fn run_file<'a>(
        &self,
        topics: &'a [TopicResult],
        pick: impl Fn(&'a TopicResult) -> &'a RankedList,
        tag: &str,
    ) -> Result<RunFile, PipelineError> {
        let mut run = RunFile::new();
        for t in topics {
            run.push_ranked(&t.topic, pick(t), tag).map_err(|e| PipelineError::stage(Stage::Rerank, &t.topic, e))?;
        }
        Ok(run)
    }

    pub fn evaluate(&self, run: &RunFile) -> Result<Option<MetricReport>, PipelineError> {
        Ok(self.load_qrels()?.map(|q| evaluate_run(run, &q, &self.cfg.eval)))
    }
}

/// Creates `<output_dir>/run-<unix seconds>[-n]` and copies the config into it.
pub fn create_run_dir(cfg: &PipelineConfig) -> Result<PathBuf, PipelineError> {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| PipelineError::io(&cfg.output_dir, e))?;
    let mut n = 0;
    let dir = loop {
        let name = if n == 0 { format!("run-{secs}") } else { format!("run-{secs}-{n}") };
        let d = cfg.output_dir.join(name);
        match std::fs::create_dir(&d) {
            Ok(()) => break d,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => n += 1,
            Err(e) => return Err(PipelineError::io(&d, e)),
        }
    };
    let p = dir.join("config.toml");
    std::fs::write(&p, cfg.to_toml()).map_err(|e| PipelineError::io(&p, e))?;
    Ok(dir)
}

#[derive(Serialize)]
struct JudgmentLine<'a> {
    topic: &'a str,
    trial: &'a str,
    #[serde(flatten)]
    evidence: &'a CandidateEvidence,
}

/// Writes `run.txt`, `metrics.tsv`, `metrics.json` and `judgments.jsonl`.
pub fn write_outputs(dir: &Path, cfg: &PipelineConfig, out: &PipelineOutput) -> Result<(), PipelineError> {
    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| PipelineError::io(&p, e))
    };
    write("run.txt", &out.run.to_text())?;
    if let Some(r) = &out.report {
        write("metrics.tsv", &r.to_tsv(&cfg.eval))?;
        write("metrics.json", &serde_json::to_string_pretty(r).expect("report serializes"))?;
    }
    let mut lines = String::new();
    for t in &out.topics {
        for e in t.candidates.entries() {
            if let Some(ev) = t.evidence.get(&e.trial_id) {
                let line = JudgmentLine { topic: &t.topic, trial: &e.trial_id, evidence: ev };
                lines.push_str(&serde_json::to_string(&line).expect("judgments serialize"));
                lines.push('\n');
            }
        }
    }
    write("judgments.jsonl", &lines)?;
    if !out.failures.is_empty() {
        let body: String = out.failures.iter().map(|(t, e)| format!("{t}\t{e}\n")).collect();
        write("failures.tsv", &body)?;
    }
    Ok(())
}

/// Runs the whole pipeline from a config and writes outputs under a fresh
/// run directory. The report is empty when no qrels are configured.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<(RunFile, MetricReport), PipelineError> {
    let pipeline = Pipeline::from_config(cfg.clone())?;
    let out = pipeline.run()?;
    let dir = create_run_dir(cfg)?;
    write_outputs(&dir, cfg, &out)?;
    log::info!("run written to {}", dir.display());
    Ok((out.run, out.report.unwrap_or_default()))
}
