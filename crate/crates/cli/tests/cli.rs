use std::path::Path;
use std::process::{Command, Output};

fn trialset(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trialset"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn benchmark_round_trip_through_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    stdout(&trialset(&["gen-benchmark", "--out", "bench", "--topics", "3", "--seed", "7"], d));
    let cfg = "bench/config.toml";

    let ingest = stdout(&trialset(&["ingest", "-c", cfg], d));
    assert!(ingest.contains("failed\t0"), "{ingest}");
    let again = stdout(&trialset(&["ingest", "-c", cfg], d));
    assert!(again.contains("stored\t0"), "{again}");

    let profiles = stdout(&trialset(&["extract-topics", "-c", cfg], d));
    assert_eq!(profiles.lines().count(), 3);

    let all = stdout(&trialset(&["run-all", "-c", cfg], d));
    let run_dir = all.lines().find_map(|l| l.strip_prefix("run_dir\t")).expect("run dir printed");
    let run_dir = d.join(run_dir);
    for f in ["run.txt", "metrics.tsv", "metrics.json", "judgments.jsonl", "config.toml"] {
        assert!(run_dir.join(f).exists(), "missing {f}");
    }

    stdout(&trialset(&["rerank", "-c", cfg, "--method", "ov", "--out", "ov.txt"], d));
    let metrics = stdout(&trialset(&["evaluate", "--run", "ov.txt", "--qrels", "bench/qrels.txt"], d));
    assert!(metrics.starts_with("topic\tndcg@10"), "{metrics}");
    assert!(metrics.lines().any(|l| l.starts_with("all\t")));

    let sweep = stdout(&trialset(&["sweep-n", "-c", cfg, "--levels", "0,2"], d));
    assert_eq!(sweep.lines().count(), 3);
}

#[test]
fn bad_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    stdout(&trialset(&["gen-benchmark", "--out", "b", "--topics", "1"], d));
    let o = trialset(&["ingest", "-c", "b/config.toml", "--set", "no_such_key=1"], d);
    assert!(!o.status.success());
    let o = trialset(&["ingest", "-c", "b/config.toml", "--set", "missing-equals"], d);
    assert!(!o.status.success());
    let o = trialset(&["rerank", "-c", "b/config.toml", "--method", "bogus"], d);
    assert!(!o.status.success());
}
