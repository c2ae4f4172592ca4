//! Qrels and run files in the whitespace-separated TREC layouts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::retrieval::RankedList;

/// Trial id to grade for one topic.
pub type TopicQrels = BTreeMap<String, u8>;

/// Graded judgments: 0 not relevant, 1 excluded, 2 eligible.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrels {
    topics: BTreeMap<String, TopicQrels>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, topic: &str, trial: &str, grade: u8) -> Result<(), EvalError> {
        if grade > 2 {
            return Err(EvalError::Parse { line: 0, message: format!("grade {grade} outside 0..=2") });
        }
        let t = self.topics.entry(topic.to_string()).or_default();
        if t.insert(trial.to_string(), grade).is_some() {
            return Err(EvalError::DuplicatePair { topic: topic.into(), trial: trial.into() });
        }
        Ok(())
    }

    /// Reads `topic 0 trial grade` lines; blank lines are skipped.
    pub fn parse(r: impl BufRead) -> Result<Self, EvalError> {
        let mut q = Qrels::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.is_empty() {
                continue;
            }
            let bad = |message: String| EvalError::Parse { line: i + 1, message };
            if f.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", f.len())));
            }
            let grade: u8 = f[3].parse().map_err(|_| bad(format!("bad grade `{}`", f[3])))?;
            q.insert(f[0], f[2], grade).map_err(|e| match e {
                EvalError::Parse { message, .. } => bad(message),
                other => other,
            })?;
        }
        Ok(q)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, judged) in &self.topics {
            for (trial, g) in judged {
                let _ = writeln!(out, "{t} 0 {trial} {g}");
            }
        }
        out
    }

    pub fn topic(&self, topic: &str) -> Option<&TopicQrels> {
        self.topics.get(topic)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TopicQrels)> {
        self.topics.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub trial_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

/// Per-topic rankings with ranks contiguous from 1 and non-increasing scores.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    topics: BTreeMap<String, Vec<RunEntry>>,
}

fn validate(topic: &str, entries: &[RunEntry]) -> Result<(), EvalError> {
    let bad = |message: String| EvalError::InvalidRun { topic: topic.into(), message };
    for (i, e) in entries.iter().enumerate() {
        if e.rank != i + 1 {
            return Err(bad(format!("rank {} at position {}", e.rank, i + 1)));
        }
        if !e.score.is_finite() {
            return Err(bad(format!("non-finite score for {}", e.trial_id)));
        }
        if e.trial_id.is_empty() || e.trial_id.contains(char::is_whitespace) {
            return Err(bad(format!("bad trial id `{}`", e.trial_id)));
        }
        if e.tag.is_empty() || e.tag.contains(char::is_whitespace) {
            return Err(bad(format!("bad tag `{}`", e.tag)));
        }
        if i > 0 && e.score > entries[i - 1].score {
            return Err(bad(format!("score increases at rank {}", e.rank)));
        }
    }
    Ok(())
}

impl RunFile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets a topic's ranking from `(trial, score)` pairs in rank order.
    pub fn push_topic<'a>(
        &mut self,
        topic: &str,
        ranked: impl IntoIterator<Item = (&'a str, f64)>,
        tag: &str,
    ) -> Result<(), EvalError> {
        let entries: Vec<RunEntry> = ranked
            .into_iter()
            .enumerate()
            .map(|(i, (id, score))| RunEntry { trial_id: id.to_string(), rank: i + 1, score, tag: tag.to_string() })
            .collect();
        validate(topic, &entries)?;
        self.topics.insert(topic.to_string(), entries);
        Ok(())
    }

    pub fn push_ranked(&mut self, topic: &str, list: &RankedList, tag: &str) -> Result<(), EvalError> {
        self.push_topic(topic, list.entries().iter().map(|e| (e.trial_id.as_str(), e.score)), tag)
    }

    /// Reads `topic Q0 trial rank score tag` lines.
    pub fn parse(r: impl BufRead) -> Result<Self, EvalError> {
        let mut topics: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.is_empty() {
                continue;
            }
            let bad = |message: String| EvalError::Parse { line: i + 1, message };
            if f.len() != 6 {
                return Err(bad(format!("expected 6 fields, found {}", f.len())));
            }
            let rank: usize = f[3].parse().map_err(|_| bad(format!("bad rank `{}`", f[3])))?;
            let score: f64 = f[4].parse().map_err(|_| bad(format!("bad score `{}`", f[4])))?;
            topics.entry(f[0].to_string()).or_default().push(RunEntry {
                trial_id: f[2].to_string(),
                rank,
                score,
                tag: f[5].to_string(),
            });
        }
        for (t, entries) in topics.iter_mut() {
            entries.sort_by_key(|e| e.rank);
            validate(t, entries)?;
        }
        Ok(Self { topics })
    }

    /// Scores use the shortest decimal form that parses back to the same
    /// value, so write then parse is lossless.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, entries) in &self.topics {
            for e in entries {
                let _ = writeln!(out, "{t} Q0 {} {} {} {}", e.trial_id, e.rank, e.score, e.tag);
            }
        }
        out
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.topics.keys().map(String::as_str)
    }

    pub fn entries(&self, topic: &str) -> &[RunEntry] {
        self.topics.get(topic).map_or(&[], Vec::as_slice)
    }

    /// Trial ids of a topic in rank order; empty for unknown topics.
    pub fn ranking(&self, topic: &str) -> impl Iterator<Item = &str> {
        self.entries(topic).iter().map(|e| e.trial_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }
}
