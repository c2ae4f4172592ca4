//! Lenient parsers for labeler responses.
//!
//! Services do not always return valid JSON: list items are often unquoted
//! and single quotes stand in for double quotes. Each parser accepts those
//! drifts but rejects unknown label tokens.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::model::{Category, CoarseLabel, EligibilityLabel};

/// The four lists of a patient-extraction response.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientExtraction {
    pub disease: Vec<String>,
    pub demographics: Vec<String>,
    pub treatment: Vec<String>,
    pub diagnosis: Vec<String>,
}

impl PatientExtraction {
    /// Serializes in the response format the extraction template requests.
    pub fn to_response(&self) -> String {
        let list = |v: &[String]| serde_json::to_string(v).expect("string list");
        format!(
            "{{\"Disease characteristics\": {}, \"demographic characteristics\": {}, \"Treatment\": {}, \"Suggested Diagnosis\": {}}}",
            list(&self.disease),
            list(&self.demographics),
            list(&self.treatment),
            list(&self.diagnosis)
        )
    }
}

const EXTRACTION_KEYS: [&str; 4] =
    ["disease characteristics", "demographic characteristics", "treatment", "suggested diagnosis"];

/// Splits a bracketed list body on commas outside quotes and parentheses.
fn split_items(body: &str) -> Vec<String> {
    let mut items = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    for c in body.chars() {
        match (quote, c) {
            (Some(q), c) if c == q => {
                quote = None;
                cur.push(c);
            }
            (Some(_), c) => cur.push(c),
            (None, '"') => {
                quote = Some('"');
                cur.push(c);
            }
            (None, '(') | (None, '[') | (None, '{') => {
                depth += 1;
                cur.push(c);
            }
            (None, ')') | (None, ']') | (None, '}') => {
                depth -= 1;
                cur.push(c);
            }
            (None, ',') if depth <= 0 => items.push(std::mem::take(&mut cur)),
            (None, c) => cur.push(c),
        }
    }
    items.push(cur);
    items
        .into_iter()
        .map(|s| s.trim().trim_matches(|c| c == '"' || c == '\'').trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Text between the `[` at `open` and its matching `]`.
fn bracket_body(text: &str, open: usize) -> Option<&str> {
    let mut depth = 0i32;
    let mut in_quote = false;
    for (i, c) in text[open..].char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            '[' if !in_quote => depth += 1,
            ']' if !in_quote => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[open + 1..open + i]);
                }
            }
            _ => {}
        }
    }
    None
}

static KEY_LIST: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"["']?([A-Za-z][A-Za-z ]*?)["']?\s*:\s*\["#).unwrap());

/// Reads every `"key": [ ... ]` pair in `text`, keys lowercased.
fn key_lists(text: &str) -> Vec<(String, Vec<String>)> {
    let mut out = Vec::new();
    for caps in KEY_LIST.captures_iter(text) {
        let m = caps.get(0).unwrap();
        let open = m.end() - 1;
        if let Some(body) = bracket_body(text, open) {
            out.push((caps[1].trim().to_lowercase(), split_items(body)));
        }
    }
    out
}

/// Parses a patient-extraction response. At least one of the four keys
/// must be present.
pub fn parse_patient_extraction(raw: &str) -> Result<PatientExtraction, String> {
    let text = raw.rsplit_once("Output:").map_or(raw, |(_, t)| t);
    let mut out = PatientExtraction::default();
    let mut found = false;
    for (key, items) in key_lists(text) {
        let slot = match EXTRACTION_KEYS.iter().position(|k| *k == key) {
            Some(0) => &mut out.disease,
            Some(1) => &mut out.demographics,
            Some(2) => &mut out.treatment,
            Some(3) => &mut out.diagnosis,
            _ => continue,
        };
        found = true;
        slot.extend(items);
    }
    if found {
        Ok(out)
    } else {
        Err("no extraction keys found".into())
    }
}

/// Maps a category name such as `"Treatment criteria"` or
/// `"prior treatment criteria"` onto a [`Category`].
pub fn category_from_name(name: &str) -> Option<Category> {
    let n = name.to_lowercase();
    if n.contains("treatment") {
        Some(Category::Treatment)
    } else if n.contains("demographic") {
        Some(Category::Demographic)
    } else if n.contains("disease") {
        Some(Category::Disease)
    } else {
        None
    }
}

/// Parses a categorization response, unioning categories across all
/// objects it contains. Accepts both `Category` and `Categories` keys.
pub fn parse_categories(raw: &str) -> Result<BTreeSet<Category>, String> {
    let mut out = BTreeSet::new();
    let mut any_key = false;
    for (key, items) in key_lists(raw) {
        if key != "category" && key != "categories" {
            continue;
        }
        any_key = true;
        for item in items {
            match category_from_name(&item) {
                Some(c) => {
                    out.insert(c);
                }
                None => return Err(format!("unknown category `{item}`")),
            }
        }
    }
    if !any_key {
        return Err("no category list found".into());
    }
    if out.is_empty() {
        return Err("empty category list".into());
    }
    Ok(out)
}

static LABEL_VALUE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?i)["']?label["']?\s*:\s*["']?\s*([a-z][a-z ]*[a-z])"#).unwrap());

/// Label values of every `Label: ...` pair, in response order.
fn label_tokens(raw: &str) -> Vec<String> {
    LABEL_VALUE.captures_iter(raw).map(|c| c[1].trim().to_lowercase()).collect()
}

/// Parses a single-criterion fine-grained response. The first label token
/// decides; an unknown token is an error.
pub fn parse_fine_label(raw: &str) -> Result<EligibilityLabel, String> {
    let tok = label_tokens(raw).into_iter().next().ok_or("no label found")?;
    tok.parse().map_err(|_| format!("unknown label `{tok}`"))
}

/// Parses every criterion label in a multi-line fine-grained response.
pub fn parse_fine_labels(raw: &str) -> Result<Vec<EligibilityLabel>, String> {
    label_tokens(raw).into_iter().map(|t| t.parse().map_err(|_| format!("unknown label `{t}`"))).collect()
}

/// Parses a coarse response such as `{'label': 'eligible'}`.
pub fn parse_coarse_label(raw: &str) -> Result<CoarseLabel, String> {
    let tok = label_tokens(raw).into_iter().next().ok_or("no label found")?;
    tok.parse().map_err(|_| format!("unknown label `{tok}`"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::templates::{CRITERION_CATEGORIZATION, PATIENT_EXTRACTION};

    #[test]
    fn worked_extraction_example() {
        let out = parse_patient_extraction(PATIENT_EXTRACTION).unwrap();
        assert_eq!(out.diagnosis, vec!["ischemic stroke"]);
        assert!(out.demographics.contains(&"Age: 62-year-old".to_string()));
        assert!(out.demographics.contains(&"African-American ethnicity".to_string()));
        assert!(out.treatment.contains(&"Use of HTCZ (Hydrochlorothiazide)".to_string()));
        assert_eq!(out.disease.len(), 14);
    }

    #[test]
    fn extraction_roundtrip() {
        let e = PatientExtraction {
            disease: vec!["cough, productive".into()],
            demographics: vec!["female".into()],
            treatment: vec![],
            diagnosis: vec!["asthma".into()],
        };
        assert_eq!(parse_patient_extraction(&e.to_response()).unwrap(), e);
        assert!(parse_patient_extraction("nothing here").is_err());
    }

    #[test]
    fn worked_categorization_example() {
        let examples = CRITERION_CATEGORIZATION.rsplit_once("Output:").unwrap().1;
        let lines: Vec<&str> = examples.split("\n{").collect();
        let last = parse_categories(lines.last().unwrap()).unwrap();
        assert_eq!(last, Category::ALL.into_iter().collect());
        let radio = lines.iter().find(|l| l.contains("radiotherapy")).unwrap();
        assert_eq!(parse_categories(radio).unwrap(), [Category::Treatment].into());
        let preg = lines.iter().find(|l| l.contains("nonpregnant")).unwrap();
        assert_eq!(parse_categories(preg).unwrap(), [Category::Demographic].into());
    }

    #[test]
    fn categories_key_variants() {
        assert_eq!(
            parse_categories(r#"{"Criterion": "x", "Categories": ["Disease Criteria", "Treatment Criteria"]}"#).unwrap(),
            [Category::Treatment, Category::Disease].into()
        );
        assert!(parse_categories(r#"{"Criterion": "x", "Category": ["Other"]}"#).is_err());
        assert!(parse_categories(r#"{"Criterion": "x"}"#).is_err());
    }

    #[test]
    fn fine_labels() {
        assert_eq!(
            parse_fine_label("{'Criterion': 'Must not have BMI >= 30', 'Label':'excluded'}").unwrap(),
            EligibilityLabel::Excluded
        );
        assert_eq!(
            parse_fine_label("{'Criterion': x, 'Label': 'no relevant information'}").unwrap(),
            EligibilityLabel::NotEnoughInfo
        );
        assert_eq!(parse_fine_label(r#"{"Criterion": "x", "Label": "ELIGIBLE"}"#).unwrap(), EligibilityLabel::Eligible);
        assert!(parse_fine_label("{'Criterion': x, 'Label': 'maybe'}").is_err());
        assert!(parse_fine_label("eligible").is_err());
    }

    #[test]
    fn worked_labeling_examples() {
        use crate::labeling::templates::{EXCLUSION_LABELING, INCLUSION_LABELING};
        use EligibilityLabel::*;
        let inc = INCLUSION_LABELING.split("(Desired Output):").nth(1).unwrap();
        assert_eq!(parse_fine_labels(inc).unwrap(), vec![NotEnoughInfo, Eligible, Excluded, Excluded]);
        let exc = EXCLUSION_LABELING.split("(Desired Output):").nth(1).unwrap();
        assert_eq!(parse_fine_labels(exc).unwrap(), vec![NotEnoughInfo, Excluded, Eligible, Excluded]);
    }

    #[test]
    fn coarse_labels() {
        assert_eq!(parse_coarse_label("Output: {'label': 'eligible'}").unwrap(), CoarseLabel::Eligible);
        assert_eq!(parse_coarse_label("{\"label\": \"Excluded\"}").unwrap(), CoarseLabel::Excluded);
        assert!(parse_coarse_label("{'label': 'no relevant information'}").is_err());
    }
}
