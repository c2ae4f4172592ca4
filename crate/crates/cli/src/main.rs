//! `trialset`: patient-to-trial matching from the command line.

use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use trialset_core::eval::{evaluate_run, EvalConfig, Qrels, RunFile};
use trialset_core::pipeline::benchmark::{generate, write_benchmark, BenchmarkSpec};
use trialset_core::pipeline::{
    create_run_dir, depth_analysis, sweep_n_level, sweep_tsv, write_outputs, Pipeline, PipelineConfig,
};

#[derive(Parser)]
#[command(name = "trialset", version, about = "Match patients to clinical trials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract and store every trial in the corpus.
    Ingest(ConfigArgs),
    /// Extract patient profiles from topic notes.
    ExtractTopics {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Write profiles as JSON lines here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First-stage retrieval plus the demographic filter.
    Retrieve {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retrieve, label and re-rank; writes a run file.
    Rerank {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a run file against graded judgments.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        /// Minimum grade counted as relevant.
        #[arg(long, default_value_t = 2)]
        threshold: u8,
    },
    /// Full pipeline into a fresh run directory.
    RunAll(ConfigArgs),
    /// Condition retrieval recall and precision per expansion level.
    SweepN {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        levels: Vec<u32>,
        #[arg(long, default_value_t = 1)]
        threshold: u8,
    },
    /// Correlate retrieval quality with diagnosis depth.
    DepthAnalysis {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 1)]
        threshold: u8,
    },
    /// Write a synthetic benchmark with planted relevance.
    GenBenchmark {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        topics: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set labeler.noise_rate=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    gate: Option<String>,
    #[arg(long)]
    n_level: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    labeler: Option<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for s in &self.sets {
            let Some((k, v)) = s.split_once('=') else { bail!("expected KEY=VALUE, got `{s}`") };
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        let quoted = |v: &str| format!("\"{v}\"");
        if let Some(m) = &self.method {
            out.push(("method".into(), quoted(m)));
        }
        if let Some(g) = &self.gate {
            out.push(("gate".into(), quoted(g)));
        }
        if let Some(n) = self.n_level {
            out.push(("n_level".into(), n.to_string()));
        }
        if let Some(s) = self.seed {
            out.push(("seed".into(), s.to_string()));
        }
        if let Some(l) = &self.labeler {
            out.push(("labeler.kind".into(), quoted(l)));
        }
        Ok(out)
    }

    fn load(&self) -> Result<PipelineConfig> {
        PipelineConfig::load(&self.config, &self.overrides()?)
            .with_context(|| format!("loading {}", self.config.display()))
    }

    fn pipeline(&self) -> Result<Pipeline> {
        Ok(Pipeline::from_config(self.load()?)?)
    }
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn report_failures(failures: &[(String, String)]) {
    for (id, e) in failures {
        log::warn!("{id}: {e}");
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Ingest(args) => {
            let p = args.pipeline()?;
            let s = p.ingest_summary();
            println!("total\t{}\nstored\t{}\nreused\t{}\nfailed\t{}", s.total, s.stored, s.reused, s.failed);
        }
        Command::ExtractTopics { cfg, out } => {
            let p = cfg.pipeline()?;
            let (patients, failures) = p.extract_topics()?;
            report_failures(&failures);
            let mut body = String::new();
            for pat in &patients {
                body.push_str(&serde_json::to_string(pat)?);
                body.push('\n');
            }
            emit(out.as_deref(), &body)?;
        }
        Command::Retrieve { cfg, out } => {
            let p = cfg.pipeline()?;
            let (patients, failures) = p.extract_topics()?;
            report_failures(&failures);
            let mut run = RunFile::new();
            for pat in &patients {
                let pat = p.expand(pat, p.config().n_level)?;
                let (_, cands) = p.candidates(&pat);
                run.push_ranked(&pat.id, &cands, "first-stage")?;
            }
            emit(out.as_deref(), &run.to_text())?;
        }
        Command::Rerank { cfg, out } => {
            let p = cfg.pipeline()?;
            let result = p.run()?;
            report_failures(&result.failures);
            emit(out.as_deref(), &result.run.to_text())?;
        }
        Command::Evaluate { run, qrels, threshold } => {
            let q = Qrels::parse(BufReader::new(
                std::fs::File::open(&qrels).with_context(|| format!("opening {}", qrels.display()))?,
            ))?;
            let r = RunFile::parse(BufReader::new(
                std::fs::File::open(&run).with_context(|| format!("opening {}", run.display()))?,
            ))?;
            let cfg = EvalConfig { rel_threshold: threshold, ..EvalConfig::default() };
            print!("{}", evaluate_run(&r, &q, &cfg).to_tsv(&cfg));
        }
        Command::RunAll(args) => {
            let cfg = args.load()?;
            let p = Pipeline::from_config(cfg.clone())?;
            let out = p.run()?;
            let dir = create_run_dir(&cfg)?;
            write_outputs(&dir, &cfg, &out)?;
            if let Some(r) = &out.report {
                print!("{}", r.to_tsv(&cfg.eval));
            }
            println!("run_dir\t{}", dir.display());
        }
        Command::SweepN { cfg, levels, threshold } => {
            let p = cfg.pipeline()?;
            let qrels = p.load_qrels()?.context("sweep needs `qrels` in the config")?;
            let (patients, failures) = p.extract_topics()?;
            report_failures(&failures);
            let rows = sweep_n_level(&p, &patients, &qrels, &levels, threshold)?;
            print!("{}", sweep_tsv(&rows));
        }
        Command::DepthAnalysis { cfg, threshold } => {
            let p = cfg.pipeline()?;
            let qrels = p.load_qrels()?.context("depth analysis needs `qrels` in the config")?;
            let (patients, failures) = p.extract_topics()?;
            report_failures(&failures);
            let rows = p.retrieval_at_level(&patients, p.config().n_level, &qrels, threshold)?;
            let a = depth_analysis(&rows, p.graph())?;
            print!("{}", a.to_tsv());
            let fmt = |r: Option<f64>| r.map_or_else(|| "undefined".to_string(), |r| format!("{r:.4}"));
            println!("# r(depth, recall) = {}\n# r(depth, precision) = {}", fmt(a.recall_r), fmt(a.precision_r));
        }
        Command::GenBenchmark { out, topics, seed } => {
            let b = generate(&BenchmarkSpec { topics, seed });
            let files = write_benchmark(&b, &out, seed)?;
            println!("config\t{}", files.config.display());
        }
    }
    Ok(())
}
