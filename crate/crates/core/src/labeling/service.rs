//! Labeling through a chat-completion service.

use std::collections::BTreeSet;
use std::time::Duration;

use parking_lot::{Condvar, Mutex};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::parse::{parse_categories, parse_coarse_label, parse_fine_label, parse_patient_extraction, PatientExtraction};
use super::{
    fine_template, CategorizeRequest, CoarseRequest, ExtractRequest, FineRequest, LabelError, Labeled, Labeler,
    TemplateName,
};
use crate::model::{Category, CoarseLabel, EligibilityLabel};

const REPAIR_NOTE: &str =
    "\n\nYour previous answer did not follow the required output format. Answer again using exactly that format.";

/// Sends a prompt and returns the completion text.
pub trait ChatBackend: Send + Sync {
    /// Identifier of the model behind the backend.
    fn model(&self) -> String;
    fn complete(&self, prompt: &str) -> Result<String, LabelError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    pub max_in_flight: usize,
    pub temperature: f64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "gpt-4-turbo".into(),
            api_key_env: "TRIALSET_API_KEY".into(),
            timeout_secs: 120,
            max_retries: 5,
            backoff_base_ms: 500,
            backoff_max_ms: 30_000,
            max_in_flight: 4,
            temperature: 0.0,
        }
    }
}

/// Counting semaphore bounding in-flight requests.
struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock();
        while *free == 0 {
            self.cv.wait(&mut free);
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock() += 1;
        self.0.cv.notify_one();
    }
}

/// Chat-completion client over HTTP with retry and a concurrency bound.
///
/// Transport failures, 429 and 5xx responses are retried with exponential
/// backoff; other statuses fail immediately.
pub struct HttpChatBackend {
    cfg: HttpConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
    gate: Semaphore,
}

impl HttpChatBackend {
    /// Reads the API key from the configured environment variable; a
    /// missing key is allowed for local endpoints.
    pub fn new(cfg: HttpConfig) -> Result<Self, LabelError> {
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Self::with_key(cfg, api_key)
    }

    pub fn with_key(cfg: HttpConfig, api_key: Option<String>) -> Result<Self, LabelError> {
        if cfg.endpoint.is_empty() {
            return Err(LabelError::Config("endpoint is empty".into()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Semaphore::new(cfg.max_in_flight);
        Ok(Self { cfg, api_key, agent, gate })
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self.cfg.backoff_base_ms.saturating_mul(1u64 << attempt.min(20));
        Duration::from_millis(ms.min(self.cfg.backoff_max_ms))
    }

    fn attempt(&self, body: &Value) -> Result<String, (bool, String)> {
        let _permit = self.gate.acquire();
        let mut req = self.agent.post(&self.cfg.endpoint).header("Content-Type", "application/json");
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(body).map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err((true, format!("HTTP {status}")));
        }
        if !(200..300).contains(&status) {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            return Err((false, format!("HTTP {status}: {text}")));
        }
        let v: Value = resp.body_mut().read_json().map_err(|e| (false, e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| (false, "response has no choices[0].message.content".into()))
    }
}

impl ChatBackend for HttpChatBackend {
    fn model(&self) -> String {
        self.cfg.model.clone()
    }

    fn complete(&self, prompt: &str) -> Result<String, LabelError> {
        let body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((retryable, msg)) if retryable && attempt < self.cfg.max_retries => {
                    let wait = self.backoff(attempt);
                    log::warn!("labeler request failed ({msg}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                Err((_, msg)) => return Err(LabelError::Transport(msg)),
            }
        }
    }
}

/// Labeler that renders the shipped templates and parses the completions.
///
/// An unparseable answer gets one repair prompt. If that also fails, fine
/// labels fall back to NotEnoughInfo and coarse labels to Excluded, both
/// marked degraded; extraction and categorization return an error.
pub struct PromptLabeler<B> {
    backend: B,
}

/// A parsed value with its raw answer, or the last raw answer and parse error.
type Attempt<T> = Result<(T, String), (String, String)>;

impl<B: ChatBackend> PromptLabeler<B> {
    pub fn new(backend: B) -> Self {
        Self { backend }
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    /// Returns the parsed value, or the last raw answer and parse error.
    fn ask<T>(&self, prompt: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Attempt<T>, LabelError> {
        let first = self.backend.complete(prompt)?;
        match parse(&first) {
            Ok(v) => return Ok(Ok((v, first))),
            Err(e) => log::debug!("unparseable answer ({e}); sending repair prompt"),
        }
        let repair = format!("{prompt}\n{first}{REPAIR_NOTE}");
        let second = self.backend.complete(&repair)?;
        Ok(match parse(&second) {
            Ok(v) => Ok((v, second)),
            Err(e) => Err((second, e)),
        })
    }

    fn strict<T>(&self, template: TemplateName, prompt: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Labeled<T>, LabelError> {
        match self.ask(prompt, parse)? {
            Ok((v, raw)) => Ok(Labeled::new(v, raw, template)),
            Err((_, detail)) => Err(LabelError::MalformedLabelerOutput { template, detail }),
        }
    }

    fn lenient<T>(
        &self,
        template: TemplateName,
        prompt: &str,
        parse: impl Fn(&str) -> Result<T, String>,
        fallback: T,
    ) -> Result<Labeled<T>, LabelError> {
        match self.ask(prompt, parse) {
            Ok(Ok((v, raw))) => Ok(Labeled::new(v, raw, template)),
            Ok(Err((raw, detail))) => {
                log::warn!("{template}: degrading after unparseable answers ({detail})");
                Ok(Labeled::degraded(fallback, raw, template))
            }
            Err(LabelError::Transport(msg)) => {
                log::warn!("{template}: degrading after transport failure ({msg})");
                Ok(Labeled::degraded(fallback, "", template))
            }
            Err(e) => Err(e),
        }
    }
}

impl<B: ChatBackend> Labeler for PromptLabeler<B> {
    fn id(&self) -> String {
        format!("prompt:{}", self.backend.model())
    }

    fn extract_patient(&self, req: &ExtractRequest<'_>) -> Result<Labeled<PatientExtraction>, LabelError> {
        let t = TemplateName::PatientExtraction;
        let prompt = t.template().render(&[("note", req.note)]);
        self.strict(t, &prompt, parse_patient_extraction)
    }

    fn categorize(&self, req: &CategorizeRequest<'_>) -> Result<Labeled<BTreeSet<Category>>, LabelError> {
        let t = TemplateName::CriterionCategorization;
        let prompt = t.template().render(&[("criterion", req.text)]);
        self.strict(t, &prompt, parse_categories)
    }

    fn fine_label(&self, req: &FineRequest<'_>) -> Result<Labeled<EligibilityLabel>, LabelError> {
        let t = fine_template(req.criterion.polarity);
        let context = req.context.render();
        let prompt = t.template().render(&[("criterion", &req.criterion.text), ("context", &context)]);
        self.lenient(t, &prompt, parse_fine_label, EligibilityLabel::NotEnoughInfo)
    }

    fn coarse_label(&self, req: &CoarseRequest<'_>) -> Result<Labeled<CoarseLabel>, LabelError> {
        let t = TemplateName::CoarseLabeling;
        let list = |it: &mut dyn Iterator<Item = (usize, &crate::model::Criterion)>| {
            it.map(|(_, c)| c.text.as_str()).collect::<Vec<_>>().join("\n")
        };
        let inclusion = list(&mut req.trial.inclusion());
        let exclusion = list(&mut req.trial.exclusion());
        let profile = req.context.render_profile();
        let prompt = t.template().render(&[("inclusion", &inclusion), ("exclusion", &exclusion), ("profile", &profile)]);
        self.lenient(t, &prompt, parse_coarse_label, CoarseLabel::Excluded)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::PatientContext;
    use crate::model::{AgeSet, Criterion, Gender, Polarity};
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Replays canned answers in order and records prompts.
    struct Scripted {
        answers: Vec<&'static str>,
        next: AtomicUsize,
        prompts: Mutex<Vec<String>>,
    }

    impl Scripted {
        fn new(answers: Vec<&'static str>) -> Self {
            Self { answers, next: AtomicUsize::new(0), prompts: Mutex::new(Vec::new()) }
        }
    }

    impl ChatBackend for Scripted {
        fn model(&self) -> String {
            "scripted".into()
        }
        fn complete(&self, prompt: &str) -> Result<String, LabelError> {
            self.prompts.lock().push(prompt.to_string());
            let i = self.next.fetch_add(1, Ordering::SeqCst);
            Ok(self.answers[i.min(self.answers.len() - 1)].to_string())
        }
    }

    fn ctx() -> PatientContext {
        PatientContext { facts: vec!["BMI of 31.6".into()], age: AgeSet::full(), gender: Gender::All }
    }

    #[test]
    fn routes_by_polarity() {
        let lb = PromptLabeler::new(Scripted::new(vec!["{'Criterion': x, 'Label': 'excluded'}"]));
        let c = ctx();
        for (pol, want) in [
            (Polarity::Inclusion, TemplateName::InclusionLabeling),
            (Polarity::Exclusion, TemplateName::ExclusionLabeling),
        ] {
            let crit = Criterion::new("Must not have BMI >= 30", pol);
            let req = FineRequest { patient_id: "p", trial_id: "t", criterion_index: 0, criterion: &crit, context: &c };
            let r = lb.fine_label(&req).unwrap();
            assert_eq!(r.template, want);
            assert_eq!(r.value, EligibilityLabel::Excluded);
        }
        let prompts = lb.backend().prompts.lock();
        assert!(prompts[0].starts_with(crate::labeling::templates::INCLUSION_LABELING));
        assert!(prompts[1].starts_with(crate::labeling::templates::EXCLUSION_LABELING));
        assert!(prompts[0].contains("- BMI of 31.6"));
    }

    #[test]
    fn repair_then_degrade() {
        let crit = Criterion::new("x", Polarity::Inclusion);
        let c = ctx();
        let req = FineRequest { patient_id: "p", trial_id: "t", criterion_index: 0, criterion: &crit, context: &c };

        let lb = PromptLabeler::new(Scripted::new(vec!["garbage", "{'Label': 'eligible'}"]));
        let r = lb.fine_label(&req).unwrap();
        assert_eq!((r.value, r.degraded), (EligibilityLabel::Eligible, false));
        assert!(lb.backend().prompts.lock()[1].ends_with(REPAIR_NOTE));

        let lb = PromptLabeler::new(Scripted::new(vec!["garbage", "{'Label': 'perhaps'}"]));
        let r = lb.fine_label(&req).unwrap();
        assert_eq!((r.value, r.degraded), (EligibilityLabel::NotEnoughInfo, true));
        assert_eq!(lb.backend().prompts.lock().len(), 2);
    }

    #[test]
    fn coarse_degrades_to_excluded_and_extraction_errors() {
        let lb = PromptLabeler::new(Scripted::new(vec!["nope"]));
        let trial = crate::model::TrialRecord {
            id: "t".into(),
            age: AgeSet::full(),
            gender: Default::default(),
            condition_raw: Default::default(),
            condition_norm: Default::default(),
            criteria: vec![Criterion::new("a", Polarity::Inclusion), Criterion::new("b", Polarity::Exclusion)],
            raw_text: String::new(),
        };
        let c = ctx();
        let r = lb.coarse_label(&CoarseRequest { patient_id: "p", trial: &trial, context: &c }).unwrap();
        assert_eq!((r.value, r.degraded), (CoarseLabel::Excluded, true));
        let prompt = lb.backend().prompts.lock()[0].clone();
        assert!(prompt.contains("(Inclusion Criteria):\na\n\n(Exclusion Criteria):\nb"));

        let e = lb.extract_patient(&ExtractRequest { patient_id: "p", note: "n" }).unwrap_err();
        assert!(matches!(e, LabelError::MalformedLabelerOutput { template: TemplateName::PatientExtraction, .. }));
    }
}
