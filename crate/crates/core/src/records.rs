//! Raw input schemas: trial records and patient topics as read from JSONL.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::model::{AgeSet, Gender, AGE_MAX};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEligibility {
    #[serde(default)]
    pub inclusion: Vec<String>,
    #[serde(default)]
    pub exclusion: Vec<String>,
}

/// An age bound given either as a number or as registry text like `"18 Years"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AgeBound {
    Years(u32),
    Text(String),
}

impl AgeBound {
    /// Whole years; `None` for `N/A` and other non-numeric text. Months,
    /// weeks and days round down to 0 years.
    pub fn years(&self) -> Option<u32> {
        match self {
            AgeBound::Years(y) => Some(*y),
            AgeBound::Text(t) => {
                let t = t.trim().to_ascii_lowercase();
                let digits: String = t.chars().take_while(|c| c.is_ascii_digit()).collect();
                let n: u32 = digits.parse().ok()?;
                let unit = t[digits.len()..].trim_start();
                if unit.starts_with("month") || unit.starts_with("week") || unit.starts_with("day") {
                    Some(0)
                } else {
                    Some(n)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAge {
    #[serde(default)]
    pub min: Option<AgeBound>,
    #[serde(default)]
    pub max: Option<AgeBound>,
}

impl RawAge {
    /// Interval from the structured bounds; `None` when both are absent.
    pub fn to_age_set(&self) -> Option<AgeSet> {
        let lo = self.min.as_ref().and_then(AgeBound::years);
        let hi = self.max.as_ref().and_then(AgeBound::years);
        if lo.is_none() && hi.is_none() {
            return None;
        }
        let lo = lo.unwrap_or(0).min(AGE_MAX);
        let hi = hi.unwrap_or(AGE_MAX).min(AGE_MAX);
        Some(if lo <= hi { AgeSet::range(lo, hi) } else { AgeSet::empty() })
    }
}

/// One clinical trial record in the raw corpus format.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTrial {
    pub id: String,
    #[serde(default)]
    pub condition: Vec<String>,
    #[serde(default)]
    pub eligibility: RawEligibility,
    #[serde(default)]
    pub age: RawAge,
    #[serde(default)]
    pub gender: Option<String>,
    #[serde(default)]
    pub text: String,
}

impl RawTrial {
    pub fn structured_gender(&self) -> Option<Gender> {
        self.gender.as_deref().map(str::trim).filter(|g| !g.is_empty()).map(Gender::parse)
    }
}

/// One patient topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTopic {
    pub id: String,
    pub note: String,
}

/// A JSONL line that failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Parses JSONL, skipping blank lines; bad lines are returned separately.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(reader: impl BufRead) -> std::io::Result<(Vec<T>, Vec<LineError>)> {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => ok.push(v),
            Err(e) => bad.push(LineError { line: i + 1, message: e.to_string() }),
        }
    }
    Ok((ok, bad))
}
