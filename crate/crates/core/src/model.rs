//! Attribute-set data model for patients and trials.
//!
//! Both document classes are bundles of typed sets: age intervals, a gender
//! singleton, free-text phrase sets and ontology concept sets. The set algebra
//! here (age intersection, gender unification) is what the demographic filter
//! and the relevance gate are built on.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper sentinel for open-ended age bounds ("18 or older").
pub const AGE_MAX: u32 = 200;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid age interval [{lo}, {hi}]")]
    InvalidInterval { lo: u32, hi: u32 },
    #[error("unknown token `{0}`")]
    UnknownToken(String),
}

/// Closed integer interval of ages in years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgeInterval {
    pub lo: u32,
    pub hi: u32,
}

impl AgeInterval {
    pub fn new(lo: u32, hi: u32) -> Result<Self, ModelError> {
        if lo > hi {
            return Err(ModelError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, age: u32) -> bool {
        self.lo <= age && age <= self.hi
    }
}

/// A normalized union of closed age intervals.
///
/// Intervals are kept sorted, disjoint and merged (adjacent integer intervals
/// such as `[1,3]` and `[4,5]` collapse into `[1,5]`), so two sets with the
/// same integer members always compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<AgeInterval>", into = "Vec<AgeInterval>")]
pub struct AgeSet {
    intervals: Vec<AgeInterval>,
}

impl AgeSet {
    pub fn new(intervals: impl IntoIterator<Item = AgeInterval>) -> Self {
        let mut intervals: Vec<AgeInterval> = intervals.into_iter().collect();
        intervals.sort();
        let mut merged: Vec<AgeInterval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi.saturating_add(1) => {
                    last.hi = last.hi.max(iv.hi);
                }
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    /// Builds a set from raw `(lo, hi)` pairs, rejecting inverted bounds.
    pub fn from_pairs(pairs: &[(u32, u32)]) -> Result<Self, ModelError> {
        let ivs = pairs
            .iter()
            .map(|&(lo, hi)| AgeInterval::new(lo, hi))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(ivs))
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    /// `[0, AGE_MAX]`; used when an age is unknown so filters never reject on it.
    pub fn full() -> Self {
        Self::range(0, AGE_MAX)
    }

    pub fn exact(age: u32) -> Self {
        Self::range(age, age)
    }

    /// Panics if `lo > hi`.
    pub fn range(lo: u32, hi: u32) -> Self {
        Self::new([AgeInterval::new(lo, hi).expect("lo <= hi")])
    }

    pub fn intervals(&self) -> &[AgeInterval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals.len() == 1 && self.intervals[0].lo == 0 && self.intervals[0].hi >= AGE_MAX
    }

    pub fn contains(&self, age: u32) -> bool {
        self.intervals.iter().any(|iv| iv.contains(age))
    }

    pub fn union(&self, other: &AgeSet) -> AgeSet {
        AgeSet::new(self.intervals.iter().chain(other.intervals.iter()).copied())
    }

    /// Interval intersection by a linear sweep over both sorted lists.
    pub fn intersect(&self, other: &AgeSet) -> AgeSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].lo.max(b[j].lo);
            let hi = a[i].hi.min(b[j].hi);
            if lo <= hi {
                out.push(AgeInterval { lo, hi });
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        // already sorted and disjoint; `new` only merges adjacency
        AgeSet::new(out)
    }
}

impl TryFrom<Vec<AgeInterval>> for AgeSet {
    type Error = ModelError;

    fn try_from(v: Vec<AgeInterval>) -> Result<Self, Self::Error> {
        for iv in &v {
            if iv.lo > iv.hi {
                return Err(ModelError::InvalidInterval { lo: iv.lo, hi: iv.hi });
            }
        }
        Ok(AgeSet::new(v))
    }
}

impl From<AgeSet> for Vec<AgeInterval> {
    fn from(s: AgeSet) -> Self {
        s.intervals
    }
}

impl fmt::Display for AgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|iv| if iv.lo == iv.hi { format!("{}", iv.lo) } else { format!("{}-{}", iv.lo, iv.hi) })
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Age relevance: the intersection of patient and trial age sets.
pub fn age_intersect(a: &AgeSet, b: &AgeSet) -> AgeSet {
    a.intersect(b)
}

/// Canonical gender token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Gender {
    Male,
    Female,
    All,
    Other(String),
}

impl Gender {
    /// Case-insensitive canonicalization. "any" and "both" unify with `All`.
    pub fn parse(raw: &str) -> Gender {
        let t = raw.trim().to_lowercase();
        match t.as_str() {
            "male" | "m" | "man" | "men" | "males" => Gender::Male,
            "female" | "f" | "woman" | "women" | "females" => Gender::Female,
            "all" | "any" | "both" | "" => Gender::All,
            _ => Gender::Other(t),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Gender::Male => "Male",
            Gender::Female => "Female",
            Gender::All => "All",
            Gender::Other(s) => s,
        }
    }
}

impl From<String> for Gender {
    fn from(s: String) -> Self {
        Gender::parse(&s)
    }
}

impl From<Gender> for String {
    fn from(g: Gender) -> Self {
        g.as_str().to_string()
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Singleton gender set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GenderSet {
    pub value: Gender,
}

impl GenderSet {
    pub fn new(value: Gender) -> Self {
        Self { value }
    }

    pub fn all() -> Self {
        Self { value: Gender::All }
    }
}

impl Default for GenderSet {
    fn default() -> Self {
        Self::all()
    }
}

/// Gender relevance: `p ∩ (r ∪ {All})` is non-empty.
///
/// A patient whose gender is unknown is `All`, which is a member of the
/// right-hand union for every trial, so it matches everything.
pub fn gender_match(p: &GenderSet, r: &GenderSet) -> bool {
    r.value == Gender::All || p.value == Gender::All || p.value == r.value
}

/// Canonical form for phrase-set members: lowercased, inner whitespace
/// collapsed, leading/trailing punctuation removed. `None` if nothing is left.
pub fn normalize_phrase(raw: &str) -> Option<String> {
    let lowered = raw.to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    let trimmed = collapsed.trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation());
    if trimmed.is_empty() {
        None
    } else {
        Some(trimmed.to_string())
    }
}

/// Set of normalized noun phrases.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhraseSet(BTreeSet<String>);

impl PhraseSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts the normalized phrase; returns false for duplicates or blanks.
    pub fn insert(&mut self, raw: &str) -> bool {
        match normalize_phrase(raw) {
            Some(p) => self.0.insert(p),
            None => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, raw: &str) -> bool {
        normalize_phrase(raw).is_some_and(|p| self.0.contains(&p))
    }
}

impl<S: AsRef<str>> FromIterator<S> for PhraseSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut set = PhraseSet::new();
        for s in iter {
            set.insert(s.as_ref());
        }
        set
    }
}

/// Opaque ontology concept identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub String);

impl ConceptId {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ConceptId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Set of concept identifiers (normalized or expanded diagnoses/conditions).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptSet(BTreeSet<ConceptId>);

impl ConceptSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: ConceptId) -> bool {
        self.0.insert(id)
    }

    pub fn contains(&self, id: &ConceptId) -> bool {
        self.0.contains(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConceptId> {
        self.0.iter()
    }

    pub fn intersection(&self, other: &ConceptSet) -> ConceptSet {
        ConceptSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn extend(&mut self, other: &ConceptSet) {
        self.0.extend(other.0.iter().cloned());
    }

    pub fn is_subset(&self, other: &ConceptSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<ConceptId> for ConceptSet {
    fn from_iter<I: IntoIterator<Item = ConceptId>>(iter: I) -> Self {
        ConceptSet(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<&'a str> for ConceptSet {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        ConceptSet(iter.into_iter().map(ConceptId::from).collect())
    }
}

/// A patient described by six attribute sets plus the source note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientProfile {
    pub id: String,
    pub age: AgeSet,
    pub gender: GenderSet,
    pub treatment: PhraseSet,
    pub diagnosis_raw: PhraseSet,
    pub diagnosis_norm: ConceptSet,
    pub diagnosis_expanded: ConceptSet,
    pub demographics: PhraseSet,
    pub disease: PhraseSet,
    pub note_text: String,
}

impl PatientProfile {
    /// Empty profile with permissive demographics.
    pub fn new(id: impl Into<String>, note_text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            age: AgeSet::full(),
            gender: GenderSet::all(),
            treatment: PhraseSet::new(),
            diagnosis_raw: PhraseSet::new(),
            diagnosis_norm: ConceptSet::new(),
            diagnosis_expanded: ConceptSet::new(),
            demographics: PhraseSet::new(),
            disease: PhraseSet::new(),
            note_text: note_text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Inclusion,
    Exclusion,
}

impl Polarity {
    pub fn index(self) -> usize {
        match self {
            Polarity::Inclusion => 0,
            Polarity::Exclusion => 1,
        }
    }
}

/// Criterion category; doubles as the attribute axis for scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Treatment,
    Demographic,
    Disease,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Treatment, Category::Demographic, Category::Disease];

    pub fn index(self) -> usize {
        match self {
            Category::Treatment => 0,
            Category::Demographic => 1,
            Category::Disease => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub text: String,
    pub polarity: Polarity,
    #[serde(default)]
    pub categories: BTreeSet<Category>,
}

impl Criterion {
    pub fn new(text: impl Into<String>, polarity: Polarity) -> Self {
        Self { text: text.into(), polarity, categories: BTreeSet::new() }
    }

    pub fn is_categorized(&self) -> bool {
        !self.categories.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub id: String,
    pub age: AgeSet,
    pub gender: GenderSet,
    pub condition_raw: PhraseSet,
    pub condition_norm: ConceptSet,
    pub criteria: Vec<Criterion>,
    pub raw_text: String,
}

impl TrialRecord {
    pub fn inclusion(&self) -> impl Iterator<Item = (usize, &Criterion)> {
        self.by_polarity(Polarity::Inclusion)
    }

    pub fn exclusion(&self) -> impl Iterator<Item = (usize, &Criterion)> {
        self.by_polarity(Polarity::Exclusion)
    }

    fn by_polarity(&self, polarity: Polarity) -> impl Iterator<Item = (usize, &Criterion)> {
        self.criteria.iter().enumerate().filter(move |(_, c)| c.polarity == polarity)
    }

    pub fn is_fully_categorized(&self) -> bool {
        self.criteria.iter().all(Criterion::is_categorized)
    }
}

/// Per-criterion three-valued eligibility label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EligibilityLabel {
    Eligible,
    Excluded,
    NotEnoughInfo,
}

impl EligibilityLabel {
    pub const ALL: [EligibilityLabel; 3] =
        [EligibilityLabel::Eligible, EligibilityLabel::Excluded, EligibilityLabel::NotEnoughInfo];

    pub fn index(self) -> usize {
        match self {
            EligibilityLabel::Eligible => 0,
            EligibilityLabel::Excluded => 1,
            EligibilityLabel::NotEnoughInfo => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EligibilityLabel::Eligible => "eligible",
            EligibilityLabel::Excluded => "excluded",
            EligibilityLabel::NotEnoughInfo => "not enough info",
        }
    }
}

impl FromStr for EligibilityLabel {
    type Err = ModelError;

    /// Accepts the prompt vocabulary, including "no relevant information".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_lowercase();
        match t.as_str() {
            "eligible" => Ok(EligibilityLabel::Eligible),
            "excluded" => Ok(EligibilityLabel::Excluded),
            "not enough info" | "not enough information" | "no relevant information" | "not_enough_info" => {
                Ok(EligibilityLabel::NotEnoughInfo)
            }
            _ => Err(ModelError::UnknownToken(s.to_string())),
        }
    }
}

/// Whole-trial binary eligibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseLabel {
    Eligible,
    Excluded,
}

impl CoarseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CoarseLabel::Eligible => "eligible",
            CoarseLabel::Excluded => "excluded",
        }
    }
}

impl FromStr for CoarseLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "eligible" => Ok(CoarseLabel::Eligible),
            "excluded" => Ok(CoarseLabel::Excluded),
            _ => Err(ModelError::UnknownToken(s.to_string())),
        }
    }
}
