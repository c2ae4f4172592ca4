//! Age and gender scanning over demographic phrases.
//!
//! Ages are standardized to a single value, an inequality or a range and
//! returned as an [`AgeSet`]; several mentions in one text are unioned.

use std::sync::LazyLock;

use regex::Regex;

use crate::model::{AgeSet, Gender, AGE_MAX};
use crate::text::tokens;

static AGE_CUE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(ages?|aged|years?|yrs?|yo|y/o|old|months?)\b").unwrap());

static AGE_PATTERN: LazyLock<Regex> = LazyLock::new(|| {
    let prefix = r"(?:aged?\s*:?\s*)?";
    let unit = r"(?:\s*(?:years?|yrs?)(?:\s+of\s+age)?)?";
    Regex::new(&format!(
        r"(?ix)
        (?P<between>between\s+(?P<b_lo>\d{{1,3}})\s+and\s+(?P<b_hi>\d{{1,3}}))
      | (?P<range>{prefix}(?P<r_lo>\d{{1,3}}){unit}\s*(?:-|–|to)\s*(?P<r_hi>\d{{1,3}})(?:\s*(?:years?|yrs?)\b)?)
      | (?P<plus>{prefix}(?P<p_lo>\d{{1,3}}){unit}\s*(?:\+|or\s+older|or\s+over|and\s+older|and\s+over|or\s+above))
      | (?P<ge>(?:>=|≥|at\s+least|greater\s+than\s+or\s+equal\s+to)\s*(?P<ge_v>\d{{1,3}}))
      | (?P<gt>(?:>|older\s+than|over|above)\s*(?P<gt_v>\d{{1,3}}))
      | (?P<le>(?:<=|≤|at\s+most|up\s+to|less\s+than\s+or\s+equal\s+to)\s*(?P<le_v>\d{{1,3}}))
      | (?P<lt>(?:<|younger\s+than|under|below|less\s+than)\s*(?P<lt_v>\d{{1,3}}))
      | (?P<months>\d{{1,2}}\s*-?\s*months?\s*-?\s*old)
      | (?P<exact>{prefix}(?P<e_v>\d{{1,3}})\s*-?\s*(?:years?|yrs?|y/?o)(?:\s*-?\s*old)?)
      | (?P<agenum>aged?\s*:?\s*(?P<a_v>\d{{1,3}})\b)
    "
    ))
    .unwrap()
});

pub fn has_age_cue(text: &str) -> bool {
    AGE_CUE.is_match(text)
}

fn num(caps: &regex::Captures<'_>, name: &str) -> u32 {
    caps[name].parse::<u32>().unwrap_or(0).min(AGE_MAX)
}

/// Parses every age mention in `text`; `None` when there is none.
pub fn parse_age(text: &str) -> Option<AgeSet> {
    if !has_age_cue(text) {
        return None;
    }
    let mut out: Option<AgeSet> = None;
    for caps in AGE_PATTERN.captures_iter(text) {
        let set = if caps.name("between").is_some() {
            interval(num(&caps, "b_lo"), num(&caps, "b_hi"))
        } else if caps.name("range").is_some() {
            interval(num(&caps, "r_lo"), num(&caps, "r_hi"))
        } else if caps.name("plus").is_some() || caps.name("ge").is_some() {
            let v = if caps.name("plus").is_some() { num(&caps, "p_lo") } else { num(&caps, "ge_v") };
            Some(AgeSet::range(v, AGE_MAX))
        } else if caps.name("gt").is_some() {
            Some(AgeSet::range((num(&caps, "gt_v") + 1).min(AGE_MAX), AGE_MAX))
        } else if caps.name("le").is_some() {
            Some(AgeSet::range(0, num(&caps, "le_v")))
        } else if caps.name("lt").is_some() {
            let v = num(&caps, "lt_v");
            if v == 0 {
                None
            } else {
                Some(AgeSet::range(0, v - 1))
            }
        } else if caps.name("months").is_some() {
            Some(AgeSet::exact(0))
        } else if caps.name("exact").is_some() {
            Some(AgeSet::exact(num(&caps, "e_v")))
        } else {
            Some(AgeSet::exact(num(&caps, "a_v")))
        };
        if let Some(s) = set {
            out = Some(match out {
                Some(acc) => acc.union(&s),
                None => s,
            });
        }
    }
    out
}

fn interval(lo: u32, hi: u32) -> Option<AgeSet> {
    (lo <= hi).then(|| AgeSet::range(lo, hi))
}

/// Gender mentioned in `text`, `All` when both are mentioned.
pub fn scan_gender(text: &str) -> Option<Gender> {
    let mut male = false;
    let mut female = false;
    for t in tokens(text) {
        match t.as_str() {
            "male" | "males" | "man" | "men" | "boy" | "boys" | "he" | "his" => male = true,
            "female" | "females" | "woman" | "women" | "girl" | "girls" | "she" | "her" => female = true,
            _ => {}
        }
    }
    match (male, female) {
        (true, true) => Some(Gender::All),
        (true, false) => Some(Gender::Male),
        (false, true) => Some(Gender::Female),
        _ => None,
    }
}

/// Union of ages over phrases carrying an age cue.
pub fn age_from_phrases<'a>(phrases: impl IntoIterator<Item = &'a str>) -> Option<AgeSet> {
    phrases.into_iter().filter_map(parse_age).reduce(|a, b| a.union(&b))
}

/// First phrase mentioning a gender decides; conflicting phrases unify to `All`.
pub fn gender_from_phrases<'a>(phrases: impl IntoIterator<Item = &'a str>) -> Option<Gender> {
    phrases.into_iter().filter_map(scan_gender).reduce(|a, b| if a == b { a } else { Gender::All })
}
