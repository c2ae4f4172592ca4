//! Label tallies and the fine/coarse scoring functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::labeling::TrialJudgments;
use crate::model::{Category, CoarseLabel, EligibilityLabel, Polarity};

/// How a criterion tagged with several categories is tallied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CategoryCounting {
    /// Once in every category bucket it carries.
    #[default]
    PerCategory,
    /// Once, in the bucket of its first category.
    Once,
}

/// Label counts indexed by attribute, polarity and label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    counts: [[[u32; 3]; 2]; 3],
}

impl LabelCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, attr: Category, pol: Polarity, label: EligibilityLabel) -> u32 {
        self.counts[attr.index()][pol.index()][label.index()]
    }

    pub fn add(&mut self, attr: Category, pol: Polarity, label: EligibilityLabel, n: u32) {
        self.counts[attr.index()][pol.index()][label.index()] += n;
    }

    /// Bucket size |polX| for one attribute.
    pub fn bucket_total(&self, attr: Category, pol: Polarity) -> u32 {
        self.counts[attr.index()][pol.index()].iter().sum()
    }

    /// Sum of `label` over the given attributes and polarities.
    pub fn sum(&self, attrs: &[Category], pols: &[Polarity], label: Option<EligibilityLabel>) -> u32 {
        let mut s = 0;
        for a in attrs {
            for p in pols {
                s += match label {
                    Some(l) => self.get(*a, *p, l),
                    None => self.bucket_total(*a, *p),
                };
            }
        }
        s
    }

    pub fn total(&self) -> u32 {
        self.sum(&Category::ALL, &BOTH, None)
    }
}

const BOTH: [Polarity; 2] = [Polarity::Inclusion, Polarity::Exclusion];
const INC: [Polarity; 1] = [Polarity::Inclusion];
const EXC: [Polarity; 1] = [Polarity::Exclusion];

pub fn count_labels(j: &TrialJudgments, counting: CategoryCounting) -> LabelCounts {
    let mut c = LabelCounts::new();
    for cj in &j.fine {
        match counting {
            CategoryCounting::PerCategory => {
                for cat in &cj.categories {
                    c.add(*cat, cj.polarity, cj.label, 1);
                }
            }
            CategoryCounting::Once => {
                if let Some(cat) = cj.categories.iter().next() {
                    c.add(*cat, cj.polarity, cj.label, 1);
                }
            }
        }
    }
    c
}

/// Serialized as its CLI token, e.g. `hybrid` or `wcontrast:1:2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScoringMethod {
    /// Inclusion eligibility.
    Ie,
    /// IE, zeroed by any Excluded label.
    Fie,
    /// IE, zeroed by an Excluded inclusion label.
    Fio,
    /// Exclusion eligibility.
    Ee,
    /// General eligibility.
    Ge,
    Contrast,
    WContrast { alpha: f64, beta: f64 },
    /// Coarse-grained: prior overlap plus one when the trial is Eligible.
    Cg,
    /// IE plus one when the trial is Eligible.
    #[default]
    Hybrid,
    /// IE over one attribute.
    RestrictedIe(Category),
    /// First-stage overlap score, unchanged and ungated.
    Overlap,
}

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 2.0;

impl ScoringMethod {
    pub fn needs_coarse(self) -> bool {
        matches!(self, ScoringMethod::Cg | ScoringMethod::Hybrid)
    }

    pub fn is_gated(self) -> bool {
        self != ScoringMethod::Overlap
    }
}

impl fmt::Display for ScoringMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoringMethod::Ie => f.write_str("ie"),
            ScoringMethod::Fie => f.write_str("fie"),
            ScoringMethod::Fio => f.write_str("fio"),
            ScoringMethod::Ee => f.write_str("ee"),
            ScoringMethod::Ge => f.write_str("ge"),
            ScoringMethod::Contrast => f.write_str("contrast"),
            ScoringMethod::WContrast { alpha, beta } => write!(f, "wcontrast:{alpha}:{beta}"),
            ScoringMethod::Cg => f.write_str("cg"),
            ScoringMethod::Hybrid => f.write_str("hybrid"),
            ScoringMethod::RestrictedIe(Category::Disease) => f.write_str("disease-only"),
            ScoringMethod::RestrictedIe(Category::Demographic) => f.write_str("demo-only"),
            ScoringMethod::RestrictedIe(Category::Treatment) => f.write_str("treatment-only"),
            ScoringMethod::Overlap => f.write_str("ov"),
        }
    }
}

impl From<ScoringMethod> for String {
    fn from(m: ScoringMethod) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for ScoringMethod {
    type Error = UnknownMethod;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown scoring method `{0}`")]
pub struct UnknownMethod(pub String);

impl FromStr for ScoringMethod {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_lowercase();
        let bad = || UnknownMethod(s.to_string());
        Ok(match t.as_str() {
            "ie" => ScoringMethod::Ie,
            "fie" => ScoringMethod::Fie,
            "fio" => ScoringMethod::Fio,
            "ee" => ScoringMethod::Ee,
            "ge" => ScoringMethod::Ge,
            "contrast" => ScoringMethod::Contrast,
            "wcontrast" => ScoringMethod::WContrast { alpha: DEFAULT_ALPHA, beta: DEFAULT_BETA },
            "cg" => ScoringMethod::Cg,
            "hybrid" => ScoringMethod::Hybrid,
            "disease-only" => ScoringMethod::RestrictedIe(Category::Disease),
            "demo-only" | "demographic-only" => ScoringMethod::RestrictedIe(Category::Demographic),
            "treatment-only" => ScoringMethod::RestrictedIe(Category::Treatment),
            "ov" | "overlap" => ScoringMethod::Overlap,
            _ => {
                let rest = t.strip_prefix("wcontrast:").ok_or_else(bad)?;
                let (a, b) = rest.split_once(':').ok_or_else(bad)?;
                let alpha: f64 = a.parse().map_err(|_| bad())?;
                let beta: f64 = b.parse().map_err(|_| bad())?;
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return Err(bad());
                }
                ScoringMethod::WContrast { alpha, beta }
            }
        })
    }
}

/// A score plus whether its denominator was empty (the score is then 0).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub empty_denominator: bool,
}

fn ratio(num: f64, den: u32) -> Score {
    if den == 0 {
        Score { value: 0.0, empty_denominator: true }
    } else {
        Score { value: num / den as f64, empty_denominator: false }
    }
}

const ALL: [Category; 3] = Category::ALL;
const E: EligibilityLabel = EligibilityLabel::Eligible;
const X: EligibilityLabel = EligibilityLabel::Excluded;

pub fn ie_score(c: &LabelCounts) -> Score {
    ratio(c.sum(&ALL, &INC, Some(E)) as f64, c.sum(&ALL, &INC, None))
}

pub fn restricted_ie_score(c: &LabelCounts, attr: Category) -> Score {
    ratio(c.sum(&[attr], &INC, Some(E)) as f64, c.sum(&[attr], &INC, None))
}

pub fn ee_score(c: &LabelCounts) -> Score {
    ratio(c.sum(&ALL, &EXC, Some(E)) as f64, c.sum(&ALL, &EXC, None))
}

pub fn ge_score(c: &LabelCounts) -> Score {
    ratio(c.sum(&ALL, &BOTH, Some(E)) as f64, c.total())
}

pub fn wcontrast_score(c: &LabelCounts, alpha: f64, beta: f64) -> Score {
    let e = c.sum(&ALL, &BOTH, Some(E)) as f64;
    let x = c.sum(&ALL, &BOTH, Some(X)) as f64;
    ratio(alpha * e - beta * x, c.total())
}

pub fn contrast_score(c: &LabelCounts) -> Score {
    wcontrast_score(c, 1.0, 1.0)
}

/// Which criteria an Excluded label must come from to zero a filtered score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterScope {
    AllCriteria,
    InclusionOnly,
}

pub fn filtered_ie_score(c: &LabelCounts, scope: FilterScope) -> Score {
    let pols: &[Polarity] = match scope {
        FilterScope::AllCriteria => &BOTH,
        FilterScope::InclusionOnly => &INC,
    };
    let base = ie_score(c);
    if c.sum(&ALL, pols, Some(X)) > 0 {
        Score { value: 0.0, ..base }
    } else {
        base
    }
}

/// `base + 1` when the coarse label is Eligible.
pub fn coarse_boost(base: f64, coarse: Option<CoarseLabel>) -> f64 {
    if coarse == Some(CoarseLabel::Eligible) {
        base + 1.0
    } else {
        base
    }
}

/// Scores a trial. `ov` is its first-stage overlap score.
pub fn score(m: ScoringMethod, c: &LabelCounts, coarse: Option<CoarseLabel>, ov: f64) -> Score {
    match m {
        ScoringMethod::Ie => ie_score(c),
        ScoringMethod::Fie => filtered_ie_score(c, FilterScope::AllCriteria),
        ScoringMethod::Fio => filtered_ie_score(c, FilterScope::InclusionOnly),
        ScoringMethod::Ee => ee_score(c),
        ScoringMethod::Ge => ge_score(c),
        ScoringMethod::Contrast => contrast_score(c),
        ScoringMethod::WContrast { alpha, beta } => wcontrast_score(c, alpha, beta),
        ScoringMethod::RestrictedIe(a) => restricted_ie_score(c, a),
        ScoringMethod::Cg => Score { value: coarse_boost(ov, coarse), empty_denominator: false },
        ScoringMethod::Hybrid => {
            let ie = ie_score(c);
            Score { value: coarse_boost(ie.value, coarse), ..ie }
        }
        ScoringMethod::Overlap => Score { value: ov, empty_denominator: false },
    }
}
