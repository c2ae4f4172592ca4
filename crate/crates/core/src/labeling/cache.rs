//! Persistent label cache.
//!
//! Records are appended to a JSONL file, one per produced label, and loaded
//! into memory on open. Each key has its own lock so concurrent requests for
//! the same key wait for a single producer call.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use parking_lot::Mutex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::parse::PatientExtraction;
use super::{
    fine_template, CategorizeRequest, CoarseRequest, ExtractRequest, FineRequest, LabelError, Labeled, Labeler,
    TemplateName,
};
use crate::model::{Category, CoarseLabel, EligibilityLabel};

/// What a cached label answers for a (patient, trial) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Criterion(usize),
    Coarse,
    Categorize(usize),
    Extract,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Criterion(i) => write!(f, "criterion:{i}"),
            Slot::Coarse => f.write_str("coarse"),
            Slot::Categorize(i) => write!(f, "categorize:{i}"),
            Slot::Extract => f.write_str("extract"),
        }
    }
}

impl FromStr for Slot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let index = |rest: &str| rest.parse::<usize>().map_err(|e| format!("bad slot `{s}`: {e}"));
        match s.split_once(':') {
            Some(("criterion", rest)) => Ok(Slot::Criterion(index(rest)?)),
            Some(("categorize", rest)) => Ok(Slot::Categorize(index(rest)?)),
            None if s == "coarse" => Ok(Slot::Coarse),
            None if s == "extract" => Ok(Slot::Extract),
            _ => Err(format!("bad slot `{s}`")),
        }
    }
}

impl Serialize for Slot {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Slot {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub labeler: String,
    pub patient_id: String,
    pub trial_id: String,
    pub slot: Slot,
    pub template_hash: String,
}

impl CacheKey {
    pub fn new(labeler: &str, patient_id: &str, trial_id: &str, slot: Slot, template: TemplateName) -> Self {
        Self {
            labeler: labeler.to_string(),
            patient_id: patient_id.to_string(),
            trial_id: trial_id.to_string(),
            slot,
            template_hash: template.template().hash().to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Record {
    #[serde(flatten)]
    key: CacheKey,
    template: TemplateName,
    label: serde_json::Value,
    raw_response: String,
    timestamp: u64,
}

#[derive(Debug, Clone)]
struct Entry {
    template: TemplateName,
    label: serde_json::Value,
    raw_response: String,
}

type SlotCell = Arc<Mutex<Option<Entry>>>;

pub struct LabelCache {
    path: Option<PathBuf>,
    file: Mutex<Option<File>>,
    entries: Mutex<HashMap<CacheKey, SlotCell>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl LabelCache {
    /// Cache that lives only in memory.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            file: Mutex::new(None),
            entries: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// Opens (or creates) the JSONL file at `path` and loads its records.
    /// Unreadable lines, such as a line cut short by a crash, are skipped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LabelError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(&path)?;
        let mut entries = HashMap::new();
        let mut skipped = 0usize;
        for line in BufReader::new(&file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Record>(&line) {
                Ok(r) => {
                    let e = Entry { template: r.template, label: r.label, raw_response: r.raw_response };
                    entries.insert(r.key, Arc::new(Mutex::new(Some(e))));
                }
                Err(_) => skipped += 1,
            }
        }
        if skipped > 0 {
            log::warn!("label cache {}: skipped {skipped} unreadable lines", path.display());
        }
        let len = file.seek(SeekFrom::End(0))?;
        if len > 0 {
            file.seek(SeekFrom::Start(len - 1))?;
            let mut last = [0u8];
            file.read_exact(&mut last)?;
            if last[0] != b'\n' {
                file.write_all(b"\n")?;
            }
        }
        Ok(Self {
            path: Some(path),
            file: Mutex::new(Some(file)),
            entries: Mutex::new(entries),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().values().filter(|c| c.lock().is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    /// Returns the cached label for `key`, or runs `producer`, persists its
    /// answer and returns it. Degraded answers are returned but not stored,
    /// so a later run asks again.
    pub fn get_or_label<T, F>(&self, key: &CacheKey, producer: F) -> Result<Labeled<T>, LabelError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<Labeled<T>, LabelError>,
    {
        let cell = self.entries.lock().entry(key.clone()).or_default().clone();
        let mut slot = cell.lock();
        if let Some(e) = slot.as_ref() {
            if let Ok(value) = serde_json::from_value(e.label.clone()) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(Labeled::new(value, e.raw_response.clone(), e.template));
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let out = producer()?;
        if out.degraded {
            return Ok(out);
        }
        let label = serde_json::to_value(&out.value).map_err(std::io::Error::other)?;
        let entry = Entry { template: out.template, label, raw_response: out.raw_response.clone() };
        self.persist(key, &entry)?;
        *slot = Some(entry);
        Ok(out)
    }

    fn persist(&self, key: &CacheKey, e: &Entry) -> Result<(), LabelError> {
        let mut file = self.file.lock();
        let Some(f) = file.as_mut() else {
            return Ok(());
        };
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let rec = Record {
            key: key.clone(),
            template: e.template,
            label: e.label.clone(),
            raw_response: e.raw_response.clone(),
            timestamp,
        };
        let mut line = serde_json::to_string(&rec).map_err(std::io::Error::other)?;
        line.push('\n');
        f.write_all(line.as_bytes())?;
        f.flush()?;
        Ok(())
    }
}

/// A labeler whose answers go through a [`LabelCache`].
pub struct CachingLabeler<L> {
    inner: L,
    cache: Arc<LabelCache>,
}

impl<L: Labeler> CachingLabeler<L> {
    pub fn new(inner: L, cache: Arc<LabelCache>) -> Self {
        Self { inner, cache }
    }

    pub fn cache(&self) -> &LabelCache {
        &self.cache
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }
}

impl<L: Labeler> Labeler for CachingLabeler<L> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn extract_patient(&self, req: &ExtractRequest<'_>) -> Result<Labeled<PatientExtraction>, LabelError> {
        let key = CacheKey::new(&self.inner.id(), req.patient_id, "", Slot::Extract, TemplateName::PatientExtraction);
        self.cache.get_or_label(&key, || self.inner.extract_patient(req))
    }

    fn categorize(&self, req: &CategorizeRequest<'_>) -> Result<Labeled<BTreeSet<Category>>, LabelError> {
        let key = CacheKey::new(
            &self.inner.id(),
            "",
            req.trial_id,
            Slot::Categorize(req.criterion_index),
            TemplateName::CriterionCategorization,
        );
        self.cache.get_or_label(&key, || self.inner.categorize(req))
    }

    fn fine_label(&self, req: &FineRequest<'_>) -> Result<Labeled<EligibilityLabel>, LabelError> {
        let key = CacheKey::new(
            &self.inner.id(),
            req.patient_id,
            req.trial_id,
            Slot::Criterion(req.criterion_index),
            fine_template(req.criterion.polarity),
        );
        self.cache.get_or_label(&key, || self.inner.fine_label(req))
    }

    fn coarse_label(&self, req: &CoarseRequest<'_>) -> Result<Labeled<CoarseLabel>, LabelError> {
        let key =
            CacheKey::new(&self.inner.id(), req.patient_id, &req.trial.id, Slot::Coarse, TemplateName::CoarseLabeling);
        self.cache.get_or_label(&key, || self.inner.coarse_label(req))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    fn key(i: usize) -> CacheKey {
        CacheKey::new("lb", "p", "t", Slot::Criterion(i), TemplateName::InclusionLabeling)
    }

    fn produce(calls: &Cell<u32>, label: EligibilityLabel) -> Result<Labeled<EligibilityLabel>, LabelError> {
        calls.set(calls.get() + 1);
        Ok(Labeled::new(label, "raw", TemplateName::InclusionLabeling))
    }

    #[test]
    fn second_call_hits() {
        let c = LabelCache::in_memory();
        let calls = Cell::new(0);
        let a = c.get_or_label(&key(0), || produce(&calls, EligibilityLabel::Eligible)).unwrap();
        let b = c.get_or_label(&key(0), || produce(&calls, EligibilityLabel::Excluded)).unwrap();
        assert_eq!(calls.get(), 1);
        assert_eq!(a, b);
        assert_eq!((c.hits(), c.misses()), (1, 1));
    }

    #[test]
    fn template_hash_is_part_of_key() {
        let c = LabelCache::in_memory();
        let calls = Cell::new(0);
        let mut k = key(0);
        c.get_or_label(&k, || produce(&calls, EligibilityLabel::Eligible)).unwrap();
        k.template_hash = "0000000000000000".into();
        c.get_or_label(&k, || produce(&calls, EligibilityLabel::Eligible)).unwrap();
        assert_eq!(calls.get(), 2);
    }

    #[test]
    fn degraded_answers_are_not_stored() {
        let c = LabelCache::in_memory();
        let calls = Cell::new(0);
        let degrade = || {
            calls.set(calls.get() + 1);
            Ok(Labeled::degraded(EligibilityLabel::NotEnoughInfo, "junk", TemplateName::InclusionLabeling))
        };
        c.get_or_label(&key(0), degrade).unwrap();
        c.get_or_label(&key(0), degrade).unwrap();
        assert_eq!(calls.get(), 2);
    }

    #[test]
    fn persists_and_survives_truncated_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        {
            let c = LabelCache::open(&path).unwrap();
            let calls = Cell::new(0);
            c.get_or_label(&key(0), || produce(&calls, EligibilityLabel::Excluded)).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"labeler\":\"lb\",\"pati").unwrap();
        drop(f);

        let c = LabelCache::open(&path).unwrap();
        assert_eq!(c.len(), 1);
        let calls = Cell::new(0);
        let got = c.get_or_label(&key(0), || produce(&calls, EligibilityLabel::Eligible)).unwrap();
        assert_eq!(got.value, EligibilityLabel::Excluded);
        assert_eq!(calls.get(), 0);
        c.get_or_label(&key(1), || produce(&calls, EligibilityLabel::Eligible)).unwrap();
        drop(c);
        let c = LabelCache::open(&path).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn slot_roundtrip() {
        for s in [Slot::Criterion(3), Slot::Coarse, Slot::Categorize(0), Slot::Extract] {
            assert_eq!(s.to_string().parse::<Slot>().unwrap(), s);
        }
        assert!("criterion:x".parse::<Slot>().is_err());
    }
}
