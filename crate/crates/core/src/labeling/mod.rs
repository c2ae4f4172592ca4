//! Free-text extraction and eligibility labeling behind a pluggable [`Labeler`].
//!
//! Implementations: [`PromptLabeler`] talks to a chat-completion service,
//! [`RuleMock`] is a deterministic keyword/numeric rule engine for tests,
//! [`NoisyLabeler`] flips a fraction of another labeler's answers, and
//! [`CachingLabeler`] puts a persistent [`LabelCache`] in front of any of them.

pub mod attributes;
mod cache;
mod mock;
pub mod parse;
mod service;
pub mod templates;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CacheKey, CachingLabeler, LabelCache, Slot};
pub use mock::{CallCounts, CountingLabeler, NoisyLabeler, RuleMock};
pub use parse::PatientExtraction;
pub use service::{ChatBackend, HttpChatBackend, HttpConfig, PromptLabeler};
pub use templates::{PromptTemplate, TemplateName};

use crate::model::{
    AgeSet, Category, CoarseLabel, Criterion, EligibilityLabel, Gender, GenderSet, PatientProfile, PhraseSet, Polarity,
    TrialRecord,
};
use crate::records::RawTrial;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("malformed {template} response: {detail}")]
    MalformedLabelerOutput { template: TemplateName, detail: String },
    #[error("patient note is empty")]
    EmptyNote,
    #[error("trial {0} has no eligibility criteria")]
    MissingCriteriaSection(String),
    #[error("label cache: {0}")]
    CacheIo(#[from] std::io::Error),
    #[error("labeler transport: {0}")]
    Transport(String),
    #[error("labeler configuration: {0}")]
    Config(String),
}

/// A labeler answer with its audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeled<T> {
    pub value: T,
    pub raw_response: String,
    pub template: TemplateName,
    /// Set when the value is a fallback after unparseable responses.
    pub degraded: bool,
}

impl<T> Labeled<T> {
    pub fn new(value: T, raw_response: impl Into<String>, template: TemplateName) -> Self {
        Self { value, raw_response: raw_response.into(), template, degraded: false }
    }

    pub fn degraded(value: T, raw_response: impl Into<String>, template: TemplateName) -> Self {
        Self { value, raw_response: raw_response.into(), template, degraded: true }
    }
}

/// Patient facts shown to the labeler for one criterion or trial.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientContext {
    pub facts: Vec<String>,
    pub age: AgeSet,
    pub gender: Gender,
}

impl PatientContext {
    /// Facts from the attribute sets matching `categories`. Disease context
    /// also carries the suggested diagnoses.
    pub fn for_categories(p: &PatientProfile, categories: &BTreeSet<Category>) -> Self {
        let mut facts = BTreeSet::new();
        let mut add = |set: &PhraseSet| facts.extend(set.iter().map(str::to_string));
        for c in categories {
            match c {
                Category::Treatment => add(&p.treatment),
                Category::Demographic => add(&p.demographics),
                Category::Disease => {
                    add(&p.diagnosis_raw);
                    add(&p.disease);
                }
            }
        }
        Self { facts: facts.into_iter().collect(), age: p.age.clone(), gender: p.gender.value.clone() }
    }

    /// Facts from every attribute set.
    pub fn full(p: &PatientProfile) -> Self {
        Self::for_categories(p, &Category::ALL.into_iter().collect())
    }

    /// Bullet list, one fact per line.
    pub fn render(&self) -> String {
        self.facts.iter().map(|f| format!("- {f}")).collect::<Vec<_>>().join("\n")
    }

    /// Facts as running prose for the whole-trial prompt.
    pub fn render_profile(&self) -> String {
        self.facts.iter().map(|f| format!("{f}.")).collect::<Vec<_>>().join(" ")
    }
}

pub struct ExtractRequest<'a> {
    pub patient_id: &'a str,
    pub note: &'a str,
}

pub struct CategorizeRequest<'a> {
    pub trial_id: &'a str,
    pub criterion_index: usize,
    pub text: &'a str,
}

pub struct FineRequest<'a> {
    pub patient_id: &'a str,
    pub trial_id: &'a str,
    pub criterion_index: usize,
    pub criterion: &'a Criterion,
    pub context: &'a PatientContext,
}

pub struct CoarseRequest<'a> {
    pub patient_id: &'a str,
    pub trial: &'a TrialRecord,
    pub context: &'a PatientContext,
}

/// The labeling function. Implementations must be safe to call from many
/// threads at once.
pub trait Labeler: Send + Sync {
    /// Stable identifier, part of cache keys and store provenance.
    fn id(&self) -> String;
    fn extract_patient(&self, req: &ExtractRequest<'_>) -> Result<Labeled<PatientExtraction>, LabelError>;
    fn categorize(&self, req: &CategorizeRequest<'_>) -> Result<Labeled<BTreeSet<Category>>, LabelError>;
    fn fine_label(&self, req: &FineRequest<'_>) -> Result<Labeled<EligibilityLabel>, LabelError>;
    fn coarse_label(&self, req: &CoarseRequest<'_>) -> Result<Labeled<CoarseLabel>, LabelError>;
}

impl<L: Labeler + ?Sized> Labeler for &L {
    fn id(&self) -> String {
        (**self).id()
    }
    fn extract_patient(&self, req: &ExtractRequest<'_>) -> Result<Labeled<PatientExtraction>, LabelError> {
        (**self).extract_patient(req)
    }
    fn categorize(&self, req: &CategorizeRequest<'_>) -> Result<Labeled<BTreeSet<Category>>, LabelError> {
        (**self).categorize(req)
    }
    fn fine_label(&self, req: &FineRequest<'_>) -> Result<Labeled<EligibilityLabel>, LabelError> {
        (**self).fine_label(req)
    }
    fn coarse_label(&self, req: &CoarseRequest<'_>) -> Result<Labeled<CoarseLabel>, LabelError> {
        (**self).coarse_label(req)
    }
}

impl<L: Labeler + ?Sized> Labeler for Box<L> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn extract_patient(&self, req: &ExtractRequest<'_>) -> Result<Labeled<PatientExtraction>, LabelError> {
        (**self).extract_patient(req)
    }
    fn categorize(&self, req: &CategorizeRequest<'_>) -> Result<Labeled<BTreeSet<Category>>, LabelError> {
        (**self).categorize(req)
    }
    fn fine_label(&self, req: &FineRequest<'_>) -> Result<Labeled<EligibilityLabel>, LabelError> {
        (**self).fine_label(req)
    }
    fn coarse_label(&self, req: &CoarseRequest<'_>) -> Result<Labeled<CoarseLabel>, LabelError> {
        (**self).coarse_label(req)
    }
}

impl<L: Labeler + ?Sized> Labeler for std::sync::Arc<L> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn extract_patient(&self, req: &ExtractRequest<'_>) -> Result<Labeled<PatientExtraction>, LabelError> {
        (**self).extract_patient(req)
    }
    fn categorize(&self, req: &CategorizeRequest<'_>) -> Result<Labeled<BTreeSet<Category>>, LabelError> {
        (**self).categorize(req)
    }
    fn fine_label(&self, req: &FineRequest<'_>) -> Result<Labeled<EligibilityLabel>, LabelError> {
        (**self).fine_label(req)
    }
    fn coarse_label(&self, req: &CoarseRequest<'_>) -> Result<Labeled<CoarseLabel>, LabelError> {
        (**self).coarse_label(req)
    }
}

/// Template used for a criterion of the given polarity.
pub fn fine_template(polarity: Polarity) -> TemplateName {
    match polarity {
        Polarity::Inclusion => TemplateName::InclusionLabeling,
        Polarity::Exclusion => TemplateName::ExclusionLabeling,
    }
}

/// Builds the pre-normalization profile from an extraction. Age and gender
/// come from the demographic phrases; absent mentions leave them permissive.
pub fn profile_from_extraction(id: &str, note: &str, ex: &PatientExtraction) -> PatientProfile {
    let mut p = PatientProfile::new(id, note);
    p.disease = ex.disease.iter().collect();
    p.demographics = ex.demographics.iter().collect();
    p.treatment = ex.treatment.iter().collect();
    p.diagnosis_raw = ex.diagnosis.iter().collect();
    if let Some(age) = attributes::age_from_phrases(ex.demographics.iter().map(String::as_str)) {
        p.age = age;
    }
    if let Some(g) = attributes::gender_from_phrases(ex.demographics.iter().map(String::as_str)) {
        p.gender = GenderSet::new(g);
    }
    p
}

pub fn extract_patient(id: &str, note: &str, lb: &dyn Labeler) -> Result<PatientProfile, LabelError> {
    if note.trim().is_empty() {
        return Err(LabelError::EmptyNote);
    }
    let ex = lb.extract_patient(&ExtractRequest { patient_id: id, note })?;
    Ok(profile_from_extraction(id, note, &ex.value))
}

/// Builds a trial record from its raw form. Condition, age and gender come
/// from the structured fields (age/gender fall back to scanning the criteria);
/// criteria are categorized only when `categorize` is set.
pub fn extract_trial(raw: &RawTrial, lb: &dyn Labeler, categorize: bool) -> Result<TrialRecord, LabelError> {
    let inc = raw.eligibility.inclusion.iter().filter(|c| !c.trim().is_empty());
    let exc = raw.eligibility.exclusion.iter().filter(|c| !c.trim().is_empty());
    let mut criteria: Vec<Criterion> = inc
        .map(|t| Criterion::new(t.trim(), Polarity::Inclusion))
        .chain(exc.map(|t| Criterion::new(t.trim(), Polarity::Exclusion)))
        .collect();
    if criteria.is_empty() {
        return Err(LabelError::MissingCriteriaSection(raw.id.clone()));
    }

    let inclusion_text = || raw.eligibility.inclusion.iter().map(String::as_str);
    let age = raw
        .age
        .to_age_set()
        .or_else(|| attributes::age_from_phrases(inclusion_text()))
        .unwrap_or_else(AgeSet::full);
    let gender = raw
        .structured_gender()
        .or_else(|| attributes::gender_from_phrases(inclusion_text()))
        .unwrap_or(Gender::All);

    if categorize {
        categorize_criteria(&raw.id, &mut criteria, lb)?;
    }
    Ok(TrialRecord {
        id: raw.id.clone(),
        age,
        gender: GenderSet::new(gender),
        condition_raw: raw.condition.iter().collect(),
        condition_norm: Default::default(),
        criteria,
        raw_text: raw.text.clone(),
    })
}

/// Fills in categories for every uncategorized criterion.
pub fn categorize_criteria(trial_id: &str, criteria: &mut [Criterion], lb: &dyn Labeler) -> Result<(), LabelError> {
    for (i, c) in criteria.iter_mut().enumerate() {
        if c.is_categorized() {
            continue;
        }
        let r = lb.categorize(&CategorizeRequest { trial_id, criterion_index: i, text: &c.text })?;
        c.categories = r.value;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionJudgment {
    pub trial_id: String,
    pub criterion_index: usize,
    pub polarity: Polarity,
    pub categories: BTreeSet<Category>,
    pub label: EligibilityLabel,
    pub template: TemplateName,
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialJudgments {
    pub trial_id: String,
    pub fine: Vec<CriterionJudgment>,
    pub coarse: Option<CoarseLabel>,
    #[serde(default)]
    pub coarse_degraded: bool,
}

/// Labels criterion `index` of `trial` against the matching patient facts.
pub fn fine_label(
    patient: &PatientProfile,
    trial: &TrialRecord,
    index: usize,
    lb: &dyn Labeler,
) -> Result<CriterionJudgment, LabelError> {
    let criterion = &trial.criteria[index];
    let context = PatientContext::for_categories(patient, &criterion.categories);
    let r = lb.fine_label(&FineRequest {
        patient_id: &patient.id,
        trial_id: &trial.id,
        criterion_index: index,
        criterion,
        context: &context,
    })?;
    Ok(CriterionJudgment {
        trial_id: trial.id.clone(),
        criterion_index: index,
        polarity: criterion.polarity,
        categories: criterion.categories.clone(),
        label: r.value,
        template: r.template,
        degraded: r.degraded,
    })
}

pub fn coarse_label(
    patient: &PatientProfile,
    trial: &TrialRecord,
    lb: &dyn Labeler,
) -> Result<Labeled<CoarseLabel>, LabelError> {
    let context = PatientContext::full(patient);
    lb.coarse_label(&CoarseRequest { patient_id: &patient.id, trial, context: &context })
}

/// Fine labels for every categorized criterion, plus the coarse label when
/// `with_coarse` is set.
pub fn judge_trial(
    patient: &PatientProfile,
    trial: &TrialRecord,
    lb: &dyn Labeler,
    with_coarse: bool,
) -> Result<TrialJudgments, LabelError> {
    let mut fine = Vec::new();
    for (i, c) in trial.criteria.iter().enumerate() {
        if c.is_categorized() {
            fine.push(fine_label(patient, trial, i, lb)?);
        }
    }
    let (coarse, coarse_degraded) = if with_coarse {
        let r = coarse_label(patient, trial, lb)?;
        (Some(r.value), r.degraded)
    } else {
        (None, false)
    };
    Ok(TrialJudgments { trial_id: trial.id.clone(), fine, coarse, coarse_degraded })
}
