//! Deterministic labelers for tests and offline benchmarks.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::LazyLock;

use regex::Regex;

use super::attributes::{has_age_cue, parse_age, scan_gender};
use super::parse::{parse_patient_extraction, PatientExtraction};
use super::{
    fine_template, CategorizeRequest, CoarseRequest, ExtractRequest, FineRequest, LabelError, Labeled, Labeler,
    PatientContext, TemplateName,
};
use crate::model::{AgeSet, Category, CoarseLabel, Criterion, EligibilityLabel, Gender, Polarity};
use crate::text::tokens;

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "with", "and", "or", "in", "on", "to", "for", "at", "by", "as", "is", "are", "was",
    "were", "be", "been", "has", "have", "had", "having", "must", "should", "patient", "patients", "subject",
    "subjects", "participant", "participants", "any", "known", "documented", "confirmed", "history", "diagnosis",
    "diagnosed", "prior", "previous", "previously", "presence", "current", "currently", "evidence", "who", "that",
    "this", "their", "his", "her", "from", "within", "suspected",
];

const NEGATION_CUES: &[&str] = &["no", "not", "without", "denies", "denied", "negative", "absence", "never", "non"];

fn is_stop(t: &str) -> bool {
    STOPWORDS.contains(&t)
}

fn is_negation(t: &str) -> bool {
    NEGATION_CUES.contains(&t)
}

/// Content tokens: lowercase, stopwords and negation cues removed.
fn content_tokens(text: &str) -> BTreeSet<String> {
    tokens(text).into_iter().filter(|t| !is_stop(t) && !is_negation(t)).collect()
}

fn is_negated(text: &str) -> bool {
    let lower = text.to_lowercase();
    lower.contains("must not") || tokens(&lower).iter().any(|t| is_negation(t))
}

static SENTENCE_SPLIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?:[.;](?:\s+|$))|\n").unwrap());
static CLAUSE_SPLIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i),\s*|\s+and\s+|\s+but\s+").unwrap());

fn sentences(text: &str) -> impl Iterator<Item = &str> {
    SENTENCE_SPLIT.split(text).map(str::trim).filter(|s| !s.is_empty())
}

/// A clause of a patient fact, with whether it is negated. Negation carries
/// over to later clauses of the same sentence ("no fever, cough or rash").
fn clauses(fact: &str) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    for s in sentences(fact) {
        let mut negated = false;
        for c in CLAUSE_SPLIT.split(s) {
            let c = c.trim();
            if c.is_empty() {
                continue;
            }
            negated = negated || is_negated(c);
            out.push((c.to_string(), negated));
        }
    }
    out
}

static COMPARATOR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)(>=|<=|≥|≤|>|<|=|greater than or equal to|less than or equal to|greater than|less than|more than|at least|at most|above|below|over|under)\s*(\d+(?:[.,]\d+)?)",
    )
    .unwrap()
});

static MEASUREMENT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)([a-z][a-z0-9\- ]*?)\s*(?:of|:|=|is|was|at)?\s*(\d+(?:\.\d+)?)").unwrap());

#[derive(Debug, Clone, Copy)]
enum Cmp {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
}

impl Cmp {
    fn parse(op: &str) -> Cmp {
        match op.to_lowercase().as_str() {
            ">=" | "≥" | "greater than or equal to" | "at least" => Cmp::Ge,
            ">" | "greater than" | "more than" | "above" | "over" => Cmp::Gt,
            "<=" | "≤" | "less than or equal to" | "at most" => Cmp::Le,
            "<" | "less than" | "below" | "under" => Cmp::Lt,
            _ => Cmp::Eq,
        }
    }

    fn holds(self, x: f64, bound: f64) -> bool {
        match self {
            Cmp::Ge => x >= bound,
            Cmp::Gt => x > bound,
            Cmp::Le => x <= bound,
            Cmp::Lt => x < bound,
            Cmp::Eq => x == bound,
        }
    }
}

fn parse_num(s: &str) -> Option<f64> {
    s.replace(',', "").parse().ok()
}

/// Evaluates a numeric threshold criterion such as "BMI >= 30" against
/// facts like "BMI of 31.6". The measure must share its last content token.
fn numeric_holds(criterion: &str, facts: &[String]) -> Option<bool> {
    let caps = COMPARATOR.captures(criterion)?;
    let m = caps.get(0).unwrap();
    let measure = content_tokens(&criterion[..m.start()]);
    let measure_tokens: Vec<String> =
        tokens(&criterion[..m.start()]).into_iter().filter(|t| measure.contains(t)).collect();
    let key = measure_tokens.last()?;
    let cmp = Cmp::parse(&caps[1]);
    let bound = parse_num(&caps[2])?;
    for fact in facts {
        for mc in MEASUREMENT.captures_iter(fact) {
            if tokens(&mc[1]).iter().any(|t| t == key) {
                if let Some(x) = parse_num(&mc[2]) {
                    return Some(cmp.holds(x, bound));
                }
            }
        }
    }
    None
}

/// Age and gender parts of a demographic criterion; `None` when the patient
/// side is unknown or the criterion has no such part.
fn demographic_holds(criterion: &str, age: &AgeSet, gender: &Gender) -> Option<bool> {
    let mut parts = Vec::new();
    if has_age_cue(criterion) {
        if let Some(range) = parse_age(criterion) {
            parts.push((!age.is_full()).then(|| !age.intersect(&range).is_empty()));
        }
    }
    if let Some(g) = scan_gender(criterion) {
        if g != Gender::All {
            parts.push((*gender != Gender::All).then(|| *gender == g));
        }
    }
    if parts.is_empty() {
        return None;
    }
    if parts.contains(&Some(false)) {
        Some(false)
    } else if parts.iter().all(Option::is_some) {
        Some(true)
    } else {
        None
    }
}

/// Phrase containment: the best-covering patient clause decides when it
/// covers at least `threshold` of the criterion's content tokens.
fn phrase_holds(criterion: &str, facts: &[String], threshold: f64) -> Option<bool> {
    let want = content_tokens(criterion);
    if want.is_empty() {
        return None;
    }
    let mut best: Option<(f64, bool)> = None;
    for fact in facts {
        for (clause, negated) in clauses(fact) {
            let have = content_tokens(&clause);
            let cover = want.intersection(&have).count() as f64 / want.len() as f64;
            if cover >= threshold && best.is_none_or(|(b, _)| cover > b) {
                best = Some((cover, negated));
            }
        }
    }
    best.map(|(_, negated)| !negated)
}

/// Deterministic rule labeler.
///
/// Fine labels come from age/gender comparison, numeric thresholds and
/// phrase containment against the patient facts; the coarse label is
/// Excluded if any criterion is Excluded, else Eligible if any is Eligible.
/// Coarse answers can be planted per (patient, trial) pair.
#[derive(Debug, Clone)]
pub struct RuleMock {
    match_threshold: f64,
    planted_coarse: HashMap<(String, String), CoarseLabel>,
}

impl Default for RuleMock {
    fn default() -> Self {
        Self { match_threshold: 0.75, planted_coarse: HashMap::new() }
    }
}

impl RuleMock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_planted_coarse(mut self, patient: &str, trial: &str, label: CoarseLabel) -> Self {
        self.planted_coarse.insert((patient.to_string(), trial.to_string()), label);
        self
    }

    /// Whether the patient has the (un-negated) characteristic the criterion names.
    fn characteristic_holds(&self, text: &str, ctx: &PatientContext) -> Option<bool> {
        demographic_holds(text, &ctx.age, &ctx.gender)
            .or_else(|| numeric_holds(text, &ctx.facts))
            .or_else(|| phrase_holds(text, &ctx.facts, self.match_threshold))
    }

    pub fn judge(&self, criterion: &Criterion, ctx: &PatientContext) -> EligibilityLabel {
        let Some(has) = self.characteristic_holds(&criterion.text, ctx) else {
            return EligibilityLabel::NotEnoughInfo;
        };
        // exclusion criteria phrased as "must not have x" are read as "x"
        let required = match criterion.polarity {
            Polarity::Inclusion => !is_negated(&criterion.text),
            Polarity::Exclusion => false,
        };
        if has == required {
            EligibilityLabel::Eligible
        } else {
            EligibilityLabel::Excluded
        }
    }

    pub fn categorize_text(text: &str) -> BTreeSet<Category> {
        const TREATMENT: &[&str] = &[
            "prior", "therapy", "therapies", "treatment", "treatments", "treated", "surgery", "surgical",
            "chemotherapy", "radiotherapy", "radiation", "received", "receiving", "medication", "medications",
            "drug", "drugs", "dose", "transplant", "transplantation", "vaccine", "vaccination", "agent",
            "agents", "inhibitor", "inhibitors",
        ];
        const DEMOGRAPHIC: &[&str] =
            &["pregnant", "nonpregnant", "pregnancy", "lactating", "ethnicity", "ethnic", "race", "language", "sex"];
        const DISEASE: &[&str] = &[
            "disease", "diagnosis", "diagnosed", "history", "cancer", "carcinoma", "tumor", "tumour", "syndrome",
            "disorder", "infection", "confirmed", "condition", "illness",
        ];
        let toks = tokens(text);
        let any = |list: &[&str]| toks.iter().any(|t| list.contains(&t.as_str()));
        let mut out = BTreeSet::new();
        if any(TREATMENT) {
            out.insert(Category::Treatment);
        }
        if has_age_cue(text) && parse_age(text).is_some() || scan_gender(text).is_some() || any(DEMOGRAPHIC) {
            out.insert(Category::Demographic);
        }
        if any(DISEASE) || out.is_empty() {
            out.insert(Category::Disease);
        }
        out
    }

    pub fn extract_text(note: &str) -> PatientExtraction {
        static DIAGNOSIS: LazyLock<Regex> =
            LazyLock::new(|| Regex::new(r"(?i)\b(?:diagnosed with|diagnosis of|suffers from)\s+").unwrap());
        const TREATMENT_CUES: &[&str] = &[
            "treated", "treatment", "therapy", "received", "receiving", "taking", "surgery", "medication",
            "prescribed", "underwent", "chemotherapy", "radiotherapy",
        ];
        let mut out = PatientExtraction::default();
        for s in sentences(note) {
            let mut rest = s.to_string();
            if let Some(m) = DIAGNOSIS.find(s) {
                let tail = &s[m.end()..];
                let dx = tail.split(',').next().unwrap_or("").trim();
                if !dx.is_empty() {
                    out.diagnosis.push(dx.to_string());
                }
                rest = s[..m.start()].trim().to_string();
                let after = tail.split_once(',').map(|(_, a)| a.trim()).unwrap_or("");
                if !after.is_empty() {
                    out.disease.push(after.to_string());
                }
            }
            if rest.is_empty() {
                continue;
            }
            let toks = tokens(&rest);
            let demographic = parse_age(&rest).is_some() || scan_gender(&rest).is_some();
            if demographic && toks.len() <= 6 {
                out.demographics.push(rest);
            } else if toks.iter().any(|t| TREATMENT_CUES.contains(&t.as_str())) {
                out.treatment.push(rest);
            } else if demographic {
                out.demographics.push(rest.clone());
                out.disease.push(rest);
            } else {
                out.disease.push(rest);
            }
        }
        out
    }
}

impl Labeler for RuleMock {
    fn id(&self) -> String {
        "rule-mock".into()
    }

    fn extract_patient(&self, req: &ExtractRequest<'_>) -> Result<Labeled<PatientExtraction>, LabelError> {
        let raw = Self::extract_text(req.note).to_response();
        let value = parse_patient_extraction(&raw).map_err(|detail| LabelError::MalformedLabelerOutput {
            template: TemplateName::PatientExtraction,
            detail,
        })?;
        Ok(Labeled::new(value, raw, TemplateName::PatientExtraction))
    }

    fn categorize(&self, req: &CategorizeRequest<'_>) -> Result<Labeled<BTreeSet<Category>>, LabelError> {
        let cats = Self::categorize_text(req.text);
        let names: Vec<String> = cats
            .iter()
            .map(|c| match c {
                Category::Treatment => "\"Treatment Criteria\"",
                Category::Demographic => "\"Demographic Criteria\"",
                Category::Disease => "\"Disease Criteria\"",
            })
            .map(String::from)
            .collect();
        let raw = format!("{{\"Criterion\": {:?}, \"Categories\": [{}]}}", req.text, names.join(", "));
        Ok(Labeled::new(cats, raw, TemplateName::CriterionCategorization))
    }

    fn fine_label(&self, req: &FineRequest<'_>) -> Result<Labeled<EligibilityLabel>, LabelError> {
        let label = self.judge(req.criterion, req.context);
        let token = match label {
            EligibilityLabel::NotEnoughInfo => "no relevant information",
            l => l.as_str(),
        };
        let raw = format!("{{'Criterion': {}, 'Label': '{}'}}", req.criterion.text, token);
        Ok(Labeled::new(label, raw, fine_template(req.criterion.polarity)))
    }

    fn coarse_label(&self, req: &CoarseRequest<'_>) -> Result<Labeled<CoarseLabel>, LabelError> {
        let planted = self.planted_coarse.get(&(req.patient_id.to_string(), req.trial.id.clone())).copied();
        let label = planted.unwrap_or_else(|| {
            let labels: Vec<EligibilityLabel> = req.trial.criteria.iter().map(|c| self.judge(c, req.context)).collect();
            if labels.contains(&EligibilityLabel::Excluded) {
                CoarseLabel::Excluded
            } else if labels.contains(&EligibilityLabel::Eligible) {
                CoarseLabel::Eligible
            } else {
                CoarseLabel::Excluded
            }
        });
        let raw = format!("{{'label': '{}'}}", label.as_str());
        Ok(Labeled::new(label, raw, TemplateName::CoarseLabeling))
    }
}

fn mix(seed: u64, parts: &[&str], salt: u64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325 ^ seed;
    for p in parts {
        for b in p.bytes().chain(std::iter::once(0xff)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h ^= salt;
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d049bb133111eb);
    h ^ (h >> 31)
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Flips a fixed fraction of another labeler's fine and coarse answers.
///
/// The decision is a hash of (seed, patient, trial, slot), so a given call
/// always gets the same answer. A flipped fine label moves to one of the two
/// other labels with equal probability.
pub struct NoisyLabeler<L> {
    inner: L,
    rate: f64,
    seed: u64,
}

impl<L: Labeler> NoisyLabeler<L> {
    pub fn new(inner: L, rate: f64, seed: u64) -> Self {
        Self { inner, rate: rate.clamp(0.0, 1.0), seed }
    }
}

impl<L: Labeler> Labeler for NoisyLabeler<L> {
    fn id(&self) -> String {
        format!("noisy({}, {}, {})", self.inner.id(), self.rate, self.seed)
    }

    fn extract_patient(&self, req: &ExtractRequest<'_>) -> Result<Labeled<PatientExtraction>, LabelError> {
        self.inner.extract_patient(req)
    }

    fn categorize(&self, req: &CategorizeRequest<'_>) -> Result<Labeled<BTreeSet<Category>>, LabelError> {
        self.inner.categorize(req)
    }

    fn fine_label(&self, req: &FineRequest<'_>) -> Result<Labeled<EligibilityLabel>, LabelError> {
        let mut out = self.inner.fine_label(req)?;
        let h = mix(self.seed, &[req.patient_id, req.trial_id], req.criterion_index as u64);
        if unit(h) < self.rate {
            let others: Vec<EligibilityLabel> =
                EligibilityLabel::ALL.into_iter().filter(|l| *l != out.value).collect();
            out.value = others[(mix(h, &[], 1) & 1) as usize];
        }
        Ok(out)
    }

    fn coarse_label(&self, req: &CoarseRequest<'_>) -> Result<Labeled<CoarseLabel>, LabelError> {
        let mut out = self.inner.coarse_label(req)?;
        let h = mix(self.seed, &[req.patient_id, &req.trial.id], u64::MAX);
        if unit(h) < self.rate {
            out.value = match out.value {
                CoarseLabel::Eligible => CoarseLabel::Excluded,
                CoarseLabel::Excluded => CoarseLabel::Eligible,
            };
        }
        Ok(out)
    }
}

/// Number of calls that reached the wrapped labeler, per operation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallCounts {
    pub extract: u64,
    pub categorize: u64,
    pub fine: u64,
    pub coarse: u64,
}

impl CallCounts {
    pub fn total(&self) -> u64 {
        self.extract + self.categorize + self.fine + self.coarse
    }
}

/// Counts calls passing through to the wrapped labeler.
pub struct CountingLabeler<L> {
    inner: L,
    counts: [AtomicU64; 4],
}

impl<L: Labeler> CountingLabeler<L> {
    pub fn new(inner: L) -> Self {
        Self { inner, counts: Default::default() }
    }

    pub fn counts(&self) -> CallCounts {
        let c = |i: usize| self.counts[i].load(Ordering::Relaxed);
        CallCounts { extract: c(0), categorize: c(1), fine: c(2), coarse: c(3) }
    }

    fn bump(&self, i: usize) {
        self.counts[i].fetch_add(1, Ordering::Relaxed);
    }
}

impl<L: Labeler> Labeler for CountingLabeler<L> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn extract_patient(&self, req: &ExtractRequest<'_>) -> Result<Labeled<PatientExtraction>, LabelError> {
        self.bump(0);
        self.inner.extract_patient(req)
    }

    fn categorize(&self, req: &CategorizeRequest<'_>) -> Result<Labeled<BTreeSet<Category>>, LabelError> {
        self.bump(1);
        self.inner.categorize(req)
    }

    fn fine_label(&self, req: &FineRequest<'_>) -> Result<Labeled<EligibilityLabel>, LabelError> {
        self.bump(2);
        self.inner.fine_label(req)
    }

    fn coarse_label(&self, req: &CoarseRequest<'_>) -> Result<Labeled<CoarseLabel>, LabelError> {
        self.bump(3);
        self.inner.coarse_label(req)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::profile_from_extraction;

    fn ctx(facts: &[&str], age: AgeSet, gender: Gender) -> PatientContext {
        PatientContext { facts: facts.iter().map(|s| s.to_string()).collect(), age, gender }
    }

    fn inc(text: &str) -> Criterion {
        Criterion::new(text, Polarity::Inclusion)
    }

    fn exc(text: &str) -> Criterion {
        Criterion::new(text, Polarity::Exclusion)
    }

    #[test]
    fn bmi_threshold_both_polarities() {
        let m = RuleMock::new();
        let c = ctx(&["BMI of 31.6", "advanced stage COPD"], AgeSet::full(), Gender::All);
        assert_eq!(m.judge(&inc("Must not have BMI >= 30"), &c), EligibilityLabel::Excluded);
        assert_eq!(m.judge(&exc("Must not have BMI >= 30"), &c), EligibilityLabel::Excluded);
        assert_eq!(m.judge(&inc("BMI >= 30"), &c), EligibilityLabel::Eligible);
        assert_eq!(m.judge(&inc("BMI < 25"), &c), EligibilityLabel::Excluded);
    }

    #[test]
    fn phrase_rules() {
        let m = RuleMock::new();
        let c = ctx(
            &["history of chest pain", "no history of asthma", "advanced stage COPD"],
            AgeSet::full(),
            Gender::All,
        );
        assert_eq!(m.judge(&inc("Advanced stage COPD"), &c), EligibilityLabel::Eligible);
        assert_eq!(m.judge(&exc("Advanced stage COPD"), &c), EligibilityLabel::Excluded);
        assert_eq!(m.judge(&exc("History of asthma"), &c), EligibilityLabel::Eligible);
        assert_eq!(m.judge(&inc("Known asthma"), &c), EligibilityLabel::Excluded);
        assert_eq!(m.judge(&inc("Referral for pharmacologic stress SPECT MPI"), &c), EligibilityLabel::NotEnoughInfo);
        assert_eq!(m.judge(&exc("the patient is pregnant"), &c), EligibilityLabel::NotEnoughInfo);
    }

    #[test]
    fn demographic_rules() {
        let m = RuleMock::new();
        let c = ctx(&[], AgeSet::exact(45), Gender::Female);
        assert_eq!(m.judge(&inc("Age 18 to 80 years"), &c), EligibilityLabel::Eligible);
        assert_eq!(m.judge(&inc("aged 65 years or older"), &c), EligibilityLabel::Excluded);
        assert_eq!(m.judge(&inc("nonpregnant females, age 18-30 or 50-70"), &c), EligibilityLabel::Excluded);
        assert_eq!(m.judge(&inc("women aged 40-50"), &c), EligibilityLabel::Eligible);
        assert_eq!(m.judge(&inc("male patients"), &c), EligibilityLabel::Excluded);
        let unknown = ctx(&[], AgeSet::full(), Gender::All);
        assert_eq!(m.judge(&inc("Age 18 to 80 years"), &unknown), EligibilityLabel::NotEnoughInfo);
    }

    #[test]
    fn categorization_examples() {
        use Category::*;
        assert_eq!(RuleMock::categorize_text("no prior radiotherapy to the neck or thorax"), [Treatment].into());
        assert_eq!(RuleMock::categorize_text("nonpregnant females, age 18-30 or 50-70"), [Demographic].into());
        assert_eq!(
            RuleMock::categorize_text("absolute neutrophil count greater than or equal to 1,500 mm3"),
            [Disease].into()
        );
        assert_eq!(
            RuleMock::categorize_text(
                "at least 4 weeks since prior thoracic or other major surgery (excluding mediastinoscopy) and recovered"
            ),
            [Treatment].into()
        );
        assert_eq!(
            RuleMock::categorize_text(
                "Postmenopausal women with a history of breast cancer, not on hormone replacement therapy"
            ),
            Category::ALL.into_iter().collect()
        );
    }

    #[test]
    fn extraction_from_note() {
        let note = "A 45-year-old woman diagnosed with velor fibrosis. History of mardel cough. \
                    No history of pallid rash. Previously treated with zorvastin. BMI of 27.";
        let ex = RuleMock::extract_text(note);
        assert_eq!(ex.diagnosis, vec!["velor fibrosis"]);
        assert_eq!(ex.demographics, vec!["A 45-year-old woman"]);
        assert_eq!(ex.treatment, vec!["Previously treated with zorvastin"]);
        assert_eq!(ex.disease, vec!["History of mardel cough", "No history of pallid rash", "BMI of 27"]);
        let p = profile_from_extraction("p1", note, &ex);
        assert_eq!(p.age, AgeSet::exact(45));
        assert_eq!(p.gender.value, Gender::Female);
    }

    #[test]
    fn female_45_note() {
        let ex = RuleMock::extract_text("female, 45 years");
        let p = profile_from_extraction("p", "female, 45 years", &ex);
        assert_eq!(p.gender.value, Gender::Female);
        assert_eq!(p.age, AgeSet::exact(45));
    }

    #[test]
    fn noisy_rate_and_determinism() {
        let noisy = NoisyLabeler::new(RuleMock::new(), 0.1, 7);
        let c = ctx(&["advanced stage COPD"], AgeSet::full(), Gender::All);
        let crit = inc("advanced stage COPD");
        let mut flipped = 0;
        let n = 5000;
        for i in 0..n {
            let tid = format!("t{i}");
            let req = FineRequest { patient_id: "p", trial_id: &tid, criterion_index: 0, criterion: &crit, context: &c };
            let a = noisy.fine_label(&req).unwrap().value;
            assert_eq!(a, noisy.fine_label(&req).unwrap().value);
            if a != EligibilityLabel::Eligible {
                flipped += 1;
            }
        }
        let rate = flipped as f64 / n as f64;
        assert!((rate - 0.1).abs() < 0.02, "flip rate {rate}");
    }
}
