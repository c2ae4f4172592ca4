//! Content-addressed store of extracted trials and patients.
//!
//! Each record is keyed by a hash of its raw input plus everything that
//! shaped its extraction (labeler, templates, normalizer), so re-ingesting
//! unchanged input finds every key already present and writes nothing.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::model::{PatientProfile, TrialRecord};

/// What produced a stored record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionProvenance {
    pub labeler: String,
    pub template_hashes: Vec<String>,
    pub normalizer: String,
}

impl ExtractionProvenance {
    pub fn fingerprint(&self) -> String {
        content_key(&[&self.labeler, &self.template_hashes.join(","), &self.normalizer])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredRecord<T> {
    key: String,
    provenance: ExtractionProvenance,
    record: T,
}

/// Hex sha256 over length-prefixed parts.
pub fn content_key(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct Table<T> {
    path: PathBuf,
    records: RwLock<HashMap<String, T>>,
    file: Mutex<File>,
}

impl<T: Clone + Serialize + DeserializeOwned> Table<T> {
    fn open(path: PathBuf) -> Result<Self, PipelineError> {
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)
            .map_err(|e| PipelineError::io(&path, e))?;
        let mut records = HashMap::new();
        let mut skipped = 0usize;
        for line in BufReader::new(&file).lines() {
            let line = line.map_err(|e| PipelineError::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<StoredRecord<T>>(&line) {
                Ok(r) => {
                    records.insert(r.key, r.record);
                }
                Err(_) => skipped += 1,
            }
        }
        if skipped > 0 {
            log::warn!("{}: skipped {skipped} unreadable lines", path.display());
        }
        terminate_last_line(&mut file).map_err(|e| PipelineError::io(&path, e))?;
        Ok(Self { path, records: RwLock::new(records), file: Mutex::new(file) })
    }

    fn get(&self, key: &str) -> Option<T> {
        self.records.read().get(key).cloned()
    }

    fn put(&self, key: &str, provenance: &ExtractionProvenance, record: &T) -> Result<bool, PipelineError> {
        let mut file = self.file.lock();
        if self.records.read().contains_key(key) {
            return Ok(false);
        }
        let line = serde_json::to_string(&StoredRecord { key: key.to_string(), provenance: provenance.clone(), record })
            .expect("record serializes");
        file.write_all(format!("{line}\n").as_bytes()).map_err(|e| PipelineError::io(&self.path, e))?;
        file.flush().map_err(|e| PipelineError::io(&self.path, e))?;
        self.records.write().insert(key.to_string(), record.clone());
        Ok(true)
    }

    fn len(&self) -> usize {
        self.records.read().len()
    }
}

/// Appends a newline if the file ends mid-line, so the next record starts
/// on a fresh line.
fn terminate_last_line(file: &mut File) -> std::io::Result<()> {
    let len = file.seek(SeekFrom::End(0))?;
    if len > 0 {
        file.seek(SeekFrom::Start(len - 1))?;
        let mut last = [0u8];
        file.read_exact(&mut last)?;
        if last[0] != b'\n' {
            file.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Trials and patients in two append-only JSONL files under one directory.
/// Reads are concurrent; writes are serialized per file.
pub struct CorpusStore {
    dir: PathBuf,
    trials: Table<TrialRecord>,
    patients: Table<PatientProfile>,
}

impl CorpusStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
        Ok(Self {
            trials: Table::open(dir.join("trials.jsonl"))?,
            patients: Table::open(dir.join("patients.jsonl"))?,
            dir,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn trial(&self, key: &str) -> Option<TrialRecord> {
        self.trials.get(key)
    }

    /// Stores a trial unless its key is present. Returns whether it was written.
    pub fn put_trial(&self, key: &str, prov: &ExtractionProvenance, r: &TrialRecord) -> Result<bool, PipelineError> {
        validate_trial(r)?;
        self.trials.put(key, prov, r)
    }

    pub fn patient(&self, key: &str) -> Option<PatientProfile> {
        self.patients.get(key)
    }

    pub fn put_patient(&self, key: &str, prov: &ExtractionProvenance, p: &PatientProfile) -> Result<bool, PipelineError> {
        if p.id.is_empty() {
            return Err(PipelineError::Config("patient without id".into()));
        }
        self.patients.put(key, prov, p)
    }

    pub fn trial_count(&self) -> usize {
        self.trials.len()
    }

    pub fn patient_count(&self) -> usize {
        self.patients.len()
    }

    /// Every stored trial, sorted by key.
    pub fn trials(&self) -> Vec<(String, TrialRecord)> {
        let mut v: Vec<_> = self.trials.records.read().iter().map(|(k, r)| (k.clone(), r.clone())).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }
}

fn validate_trial(r: &TrialRecord) -> Result<(), PipelineError> {
    let bad = |m: &str| Err(PipelineError::Config(format!("trial {}: {m}", r.id)));
    if r.id.trim().is_empty() {
        return bad("empty id");
    }
    if r.criteria.is_empty() {
        return bad("no criteria");
    }
    if r.criteria.iter().any(|c| c.text.trim().is_empty()) {
        return bad("empty criterion text");
    }
    Ok(())
}
