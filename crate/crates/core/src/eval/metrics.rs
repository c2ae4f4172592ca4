//! Ranking metrics over one topic.

use serde::{Deserialize, Serialize};

use super::TopicQrels;

/// NDCG gain for a grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    /// `g`
    #[default]
    Linear,
    /// `2^g - 1`
    Exponential,
}

impl Gain {
    pub fn value(self, grade: u8) -> f64 {
        match self {
            Gain::Linear => grade as f64,
            Gain::Exponential => (1u64 << grade) as f64 - 1.0,
        }
    }
}

fn grade(judged: &TopicQrels, id: &str) -> u8 {
    judged.get(id).copied().unwrap_or(0)
}

fn discount(i: usize) -> f64 {
    1.0 / ((i + 2) as f64).log2()
}

/// Normalized DCG over the first `k` positions; 0 when nothing is relevant.
pub fn ndcg_at_k<S: AsRef<str>>(ranking: &[S], judged: &TopicQrels, k: usize, gain: Gain) -> f64 {
    let mut ideal: Vec<u8> = judged.values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal.iter().take(k).enumerate().map(|(i, &g)| gain.value(g) * discount(i)).sum();
    if idcg == 0.0 {
        return 0.0;
    }
    let dcg: f64 =
        ranking.iter().take(k).enumerate().map(|(i, id)| gain.value(grade(judged, id.as_ref())) * discount(i)).sum();
    dcg / idcg
}

fn relevant_in_top<S: AsRef<str>>(ranking: &[S], judged: &TopicQrels, k: usize, threshold: u8) -> usize {
    ranking.iter().take(k).filter(|id| grade(judged, id.as_ref()) >= threshold).count()
}

/// Fraction of the first `k` slots holding a relevant trial; missing slots
/// count as non-relevant.
pub fn precision_at_k<S: AsRef<str>>(ranking: &[S], judged: &TopicQrels, k: usize, threshold: u8) -> f64 {
    if k == 0 {
        return 0.0;
    }
    relevant_in_top(ranking, judged, k, threshold) as f64 / k as f64
}

/// Recall within the first `n` positions; `None` when the topic has no
/// relevant trials.
pub fn recall_at_n<S: AsRef<str>>(ranking: &[S], judged: &TopicQrels, n: usize, threshold: u8) -> Option<f64> {
    let total = judged.values().filter(|&&g| g >= threshold).count();
    if total == 0 {
        return None;
    }
    Some(relevant_in_top(ranking, judged, n, threshold) as f64 / total as f64)
}

/// Reciprocal rank of the first relevant trial, 0 if none.
pub fn mrr<S: AsRef<str>>(ranking: &[S], judged: &TopicQrels, threshold: u8) -> f64 {
    ranking
        .iter()
        .position(|id| grade(judged, id.as_ref()) >= threshold)
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qrels(pairs: &[(&str, u8)]) -> TopicQrels {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn ndcg_cases() {
        let q = qrels(&[("a", 2), ("b", 1), ("c", 0)]);
        assert_eq!(ndcg_at_k(&["a", "b", "c"], &q, 10, Gain::Linear), 1.0);
        let q = qrels(&[("x", 0), ("y", 2)]);
        let got = ndcg_at_k(&["x", "y"], &q, 10, Gain::Linear);
        assert!((got - 1.0 / 3f64.log2()).abs() < 1e-15);
        assert_eq!(ndcg_at_k(&["x"], &qrels(&[("x", 0)]), 10, Gain::Linear), 0.0);
        let q = qrels(&[("a", 2), ("b", 1)]);
        let lin = ndcg_at_k(&["b", "a"], &q, 10, Gain::Linear);
        let exp = ndcg_at_k(&["b", "a"], &q, 10, Gain::Exponential);
        assert!((lin - (1.0 + 2.0 / 3f64.log2()) / (2.0 + 1.0 / 3f64.log2())).abs() < 1e-15);
        assert!((exp - (1.0 + 3.0 / 3f64.log2()) / (3.0 + 1.0 / 3f64.log2())).abs() < 1e-15);
    }

    #[test]
    fn binary_metrics() {
        let ids: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
        let q = qrels(&[("d1", 2), ("d4", 2), ("d7", 2), ("d8", 1), ("zz", 2)]);
        assert!((precision_at_k(&ids, &q, 10, 2) - 0.3).abs() < 1e-15);
        assert!((precision_at_k(&ids, &q, 10, 1) - 0.4).abs() < 1e-15);
        assert_eq!(precision_at_k(&ids[..2], &q, 4, 2), 0.25);
        assert_eq!(recall_at_n(&ids, &q, 500, 2), Some(0.75));
        assert_eq!(recall_at_n(&ids, &qrels(&[("d1", 1)]), 5, 2), None);
        assert_eq!(mrr(&ids, &q, 2), 0.5);
        assert_eq!(mrr(&["a", "b", "d4"], &q, 2), 1.0 / 3.0);
        assert_eq!(mrr(&["a"], &q, 2), 0.0);
    }
}
