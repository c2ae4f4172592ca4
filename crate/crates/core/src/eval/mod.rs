//! TREC-style evaluation: qrels and run files, ranking metrics, and the
//! agreement statistics used in analysis.

mod metrics;
mod stats;
mod trec;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use metrics::{mrr, ndcg_at_k, precision_at_k, recall_at_n, Gain};
pub use stats::{classification_metrics, cohen_kappa, pearson_r, ClassificationMetrics};
pub use trec::{Qrels, RunEntry, RunFile, TopicQrels};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate judgment for topic {topic}, trial {trial}")]
    DuplicatePair { topic: String, trial: String },
    #[error("topic {topic}: {message}")]
    InvalidRun { topic: String, message: String },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("statistic undefined: {0}")]
    Undefined(&'static str),
    #[error("zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub ndcg_ks: Vec<usize>,
    pub precision_ks: Vec<usize>,
    pub recall_ns: Vec<usize>,
    /// Minimum grade counted as relevant by the binary metrics.
    pub rel_threshold: u8,
    pub gain: Gain,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            ndcg_ks: vec![10],
            precision_ks: vec![10, 25],
            recall_ns: vec![10, 25, 500],
            rel_threshold: 2,
            gain: Gain::Linear,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicMetrics {
    pub ndcg: BTreeMap<usize, f64>,
    pub precision: BTreeMap<usize, f64>,
    /// `None` when the topic has no relevant trials.
    pub recall: BTreeMap<usize, Option<f64>>,
    pub mrr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_topic: BTreeMap<String, TopicMetrics>,
    /// Means over topics; recall means skip topics with no relevant trials.
    pub macro_avg: TopicMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pearson: Option<f64>,
}

impl MetricReport {
    pub fn ndcg(&self, k: usize) -> f64 {
        self.macro_avg.ndcg.get(&k).copied().unwrap_or(0.0)
    }

    pub fn precision(&self, k: usize) -> f64 {
        self.macro_avg.precision.get(&k).copied().unwrap_or(0.0)
    }

    pub fn recall(&self, n: usize) -> Option<f64> {
        self.macro_avg.recall.get(&n).copied().flatten()
    }

    pub fn mrr(&self) -> f64 {
        self.macro_avg.mrr
    }

    /// Tab-separated table, one row per topic plus a final `all` row.
    pub fn to_tsv(&self, cfg: &EvalConfig) -> String {
        let mut out = String::from("topic");
        for k in &cfg.ndcg_ks {
            out.push_str(&format!("\tndcg@{k}"));
        }
        for k in &cfg.precision_ks {
            out.push_str(&format!("\tp@{k}"));
        }
        for n in &cfg.recall_ns {
            out.push_str(&format!("\trecall@{n}"));
        }
        out.push_str("\tmrr\n");
        let row = |name: &str, m: &TopicMetrics, out: &mut String| {
            out.push_str(name);
            for k in &cfg.ndcg_ks {
                out.push_str(&format!("\t{:.4}", m.ndcg.get(k).copied().unwrap_or(0.0)));
            }
            for k in &cfg.precision_ks {
                out.push_str(&format!("\t{:.4}", m.precision.get(k).copied().unwrap_or(0.0)));
            }
            for n in &cfg.recall_ns {
                match m.recall.get(n).copied().flatten() {
                    Some(r) => out.push_str(&format!("\t{r:.4}")),
                    None => out.push_str("\tNA"),
                }
            }
            out.push_str(&format!("\t{:.4}\n", m.mrr));
        };
        for (t, m) in &self.per_topic {
            row(t, m, &mut out);
        }
        row("all", &self.macro_avg, &mut out);
        out
    }
}

/// Scores every qrels topic; topics missing from the run count as empty
/// rankings and run topics without qrels are skipped with a warning.
pub fn evaluate_run(run: &RunFile, qrels: &Qrels, cfg: &EvalConfig) -> MetricReport {
    for t in run.topics() {
        if qrels.topic(t).is_none() {
            log::warn!("run topic {t} has no qrels; skipped");
        }
    }
    let mut per_topic = BTreeMap::new();
    for (topic, judged) in qrels.iter() {
        let ranking: Vec<&str> = run.ranking(topic).collect();
        let mut m = TopicMetrics::default();
        for &k in &cfg.ndcg_ks {
            m.ndcg.insert(k, ndcg_at_k(&ranking, judged, k, cfg.gain));
        }
        for &k in &cfg.precision_ks {
            m.precision.insert(k, precision_at_k(&ranking, judged, k, cfg.rel_threshold));
        }
        for &n in &cfg.recall_ns {
            m.recall.insert(n, recall_at_n(&ranking, judged, n, cfg.rel_threshold));
        }
        m.mrr = mrr(&ranking, judged, cfg.rel_threshold);
        per_topic.insert(topic.to_string(), m);
    }
    let macro_avg = macro_average(&per_topic, cfg);
    MetricReport { per_topic, macro_avg, ..Default::default() }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn macro_average(per_topic: &BTreeMap<String, TopicMetrics>, cfg: &EvalConfig) -> TopicMetrics {
    let mut m = TopicMetrics::default();
    for &k in &cfg.ndcg_ks {
        m.ndcg.insert(k, mean(per_topic.values().map(|t| t.ndcg[&k])));
    }
    for &k in &cfg.precision_ks {
        m.precision.insert(k, mean(per_topic.values().map(|t| t.precision[&k])));
    }
    for &n in &cfg.recall_ns {
        let defined: Vec<f64> = per_topic.values().filter_map(|t| t.recall[&n]).collect();
        m.recall.insert(n, (!defined.is_empty()).then(|| mean(defined.into_iter())));
    }
    m.mrr = mean(per_topic.values().map(|t| t.mrr));
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_single_topic() {
        let qrels = Qrels::parse("t1 0 a 2\nt1 0 b 1\nt1 0 c 0\n".as_bytes()).unwrap();
        let mut run = RunFile::new();
        run.push_topic("t1", [("a", 3.0), ("b", 2.0), ("c", 1.0)], "x").unwrap();
        let cfg = EvalConfig::default();
        let r = evaluate_run(&run, &qrels, &cfg);
        assert_eq!(r.ndcg(10), 1.0);
        assert_eq!(r.mrr(), 1.0);
        assert_eq!(r.recall(10), Some(1.0));
        assert_eq!(r.precision(10), 0.1);
        assert!(r.to_tsv(&cfg).lines().last().unwrap().starts_with("all\t1.0000"));
    }

    #[test]
    fn empty_run_scores_zero() {
        let qrels = Qrels::parse("t1 0 a 2\nt2 0 b 0\n".as_bytes()).unwrap();
        let r = evaluate_run(&RunFile::new(), &qrels, &EvalConfig::default());
        assert_eq!(r.ndcg(10), 0.0);
        assert_eq!(r.mrr(), 0.0);
        assert_eq!(r.precision(25), 0.0);
        // t2 has no relevant trials, so only t1 counts
        assert_eq!(r.recall(500), Some(0.0));
        assert_eq!(r.per_topic["t2"].recall[&500], None);
    }
}
