//! Prompt templates shipped with the crate.
//!
//! Each template is a verbatim instruction asset plus a short rendering
//! suffix that carries the per-call input. The version hash covers both.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    PatientExtraction,
    CriterionCategorization,
    InclusionLabeling,
    ExclusionLabeling,
    CoarseLabeling,
}

impl TemplateName {
    pub const ALL: [TemplateName; 5] = [
        TemplateName::PatientExtraction,
        TemplateName::CriterionCategorization,
        TemplateName::InclusionLabeling,
        TemplateName::ExclusionLabeling,
        TemplateName::CoarseLabeling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::PatientExtraction => "patient_extraction",
            TemplateName::CriterionCategorization => "criterion_categorization",
            TemplateName::InclusionLabeling => "inclusion_labeling",
            TemplateName::ExclusionLabeling => "exclusion_labeling",
            TemplateName::CoarseLabeling => "coarse_labeling",
        }
    }

    pub fn template(self) -> &'static PromptTemplate {
        let all = templates();
        &all[self as usize]
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub name: TemplateName,
    /// Instruction text as shipped in `assets/prompts`.
    pub asset: &'static str,
    /// Appended after the asset; `{name}` placeholders are substituted.
    pub suffix: &'static str,
    hash: String,
}

impl PromptTemplate {
    fn new(name: TemplateName, asset: &'static str, suffix: &'static str) -> Self {
        let mut h = Sha256::new();
        h.update(asset.as_bytes());
        h.update(suffix.as_bytes());
        let digest = h.finalize();
        let hash = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        Self { name, asset, suffix, hash }
    }

    /// First 16 hex digits of the SHA-256 over asset and suffix.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Full prompt with each `{key}` in the suffix replaced by its value.
    pub fn render(&self, vars: &[(&str, &str)]) -> String {
        let mut tail = self.suffix.to_string();
        for (k, v) in vars {
            tail = tail.replace(&format!("{{{k}}}"), v);
        }
        let mut out = String::with_capacity(self.asset.len() + tail.len());
        out.push_str(self.asset);
        out.push_str(&tail);
        out
    }
}

pub const PATIENT_EXTRACTION: &str = include_str!("../../assets/prompts/patient_extraction.txt");
pub const CRITERION_CATEGORIZATION: &str = include_str!("../../assets/prompts/criterion_categorization.txt");
pub const INCLUSION_LABELING: &str = include_str!("../../assets/prompts/inclusion_labeling.txt");
pub const EXCLUSION_LABELING: &str = include_str!("../../assets/prompts/exclusion_labeling.txt");
pub const COARSE_LABELING: &str = include_str!("../../assets/prompts/coarse_labeling.txt");

fn templates() -> &'static [PromptTemplate; 5] {
    static CELL: OnceLock<[PromptTemplate; 5]> = OnceLock::new();
    CELL.get_or_init(|| {
        [
            PromptTemplate::new(
                TemplateName::PatientExtraction,
                PATIENT_EXTRACTION,
                "\nInput: \"{note}\"\n\nOutput:",
            ),
            PromptTemplate::new(
                TemplateName::CriterionCategorization,
                CRITERION_CATEGORIZATION,
                "\nInput: \"{criterion}\"\n\nOutput:",
            ),
            PromptTemplate::new(
                TemplateName::InclusionLabeling,
                INCLUSION_LABELING,
                "\n- {criterion}\n\nPatient characteristics:\n{context}\n\nOutput:",
            ),
            PromptTemplate::new(
                TemplateName::ExclusionLabeling,
                EXCLUSION_LABELING,
                "\n- {criterion}\n\nPatient characteristics:\n{context}\n\nOutput:",
            ),
            PromptTemplate::new(
                TemplateName::CoarseLabeling,
                COARSE_LABELING,
                "\n(Inclusion Criteria):\n{inclusion}\n\n(Exclusion Criteria):\n{exclusion}\n\n(Patient Profile):\n\"{profile}\"\n\nOutput:",
            ),
        ]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_index_their_templates() {
        for n in TemplateName::ALL {
            assert_eq!(n.template().name, n);
            assert_eq!(n.template().hash().len(), 16);
        }
    }

    #[test]
    fn render_substitutes_placeholders() {
        let t = TemplateName::InclusionLabeling.template();
        let p = t.render(&[("criterion", "age >= 18"), ("context", "- Age: 45")]);
        assert!(p.starts_with(INCLUSION_LABELING));
        assert!(p.ends_with("\n- age >= 18\n\nPatient characteristics:\n- Age: 45\n\nOutput:"));
    }

    #[test]
    fn hashes_are_distinct() {
        let mut hs: Vec<_> = TemplateName::ALL.iter().map(|n| n.template().hash().to_string()).collect();
        hs.sort();
        hs.dedup();
        assert_eq!(hs.len(), 5);
    }
}
