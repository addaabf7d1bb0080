use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

use ideaforge::pipeline::{
    backend_for, evaluate_run, export_report, prepare, run_generation, EvaluationReport, ExportFormat, PipelineError, RunConfig,
};

#[derive(Parser)]
#[command(name = "ideaforge", version, about = "Generate design concepts with a completion backend and score their novelty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a raw corpus into condition-first records plus a manifest.
    Prepare(Common),
    /// Generate concepts (resumes a partial run).
    Generate(Common),
    /// Deduplicate and score persisted concepts.
    Evaluate(Common),
    /// Export the evaluation as tables and a summary document.
    Report {
        #[command(flatten)]
        common: Common,
        /// Output formats.
        #[arg(long, value_delimiter = ',', default_values = ["csv", "json"])]
        format: Vec<Format>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    n_total: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    top_k: Option<u32>,
    #[arg(long)]
    top_p: Option<f64>,
    /// Stop sequence; repeat for several.
    #[arg(long)]
    stop: Vec<String>,
    /// Reference document as NAME=PATH; repeat for several.
    #[arg(long, value_parser = parse_reference)]
    reference: Vec<(String, PathBuf)>,
    /// Embeddings for WMD.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Embeddings for minimum pairwise relevancy.
    #[arg(long)]
    relevancy_embeddings: Option<PathBuf>,
    /// Remove stopwords before scoring.
    #[arg(long)]
    stopwords: Option<Toggle>,
    /// Use the deterministic mock backend.
    #[arg(long)]
    mock: bool,
    /// Override the work directory.
    #[arg(long)]
    work_dir: Option<PathBuf>,
}

fn parse_reference(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_owned(), PathBuf::from(path))),
        _ => Err(format!("expected NAME=PATH, got {s:?}")),
    }
}

fn from_cwd(p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        return p;
    }
    std::env::current_dir().map(|d| d.join(&p)).unwrap_or(p)
}

impl Common {
    fn load(&self) -> Result<RunConfig, PipelineError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(v) = self.n_total {
            cfg.n_total = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        let g = &mut cfg.generation;
        g.temperature = self.temperature.or(g.temperature);
        g.top_k = self.top_k.or(g.top_k);
        g.top_p = self.top_p.or(g.top_p);
        if !self.stop.is_empty() {
            g.stop = Some(self.stop.clone());
        }
        for (name, path) in &self.reference {
            cfg.evaluation.references.insert(name.clone(), from_cwd(path.clone()));
        }
        if let Some(p) = &self.embeddings {
            cfg.evaluation.embeddings = Some(from_cwd(p.clone()));
        }
        if let Some(p) = &self.relevancy_embeddings {
            cfg.evaluation.relevancy_embeddings = Some(from_cwd(p.clone()));
        }
        if let Some(t) = self.stopwords {
            cfg.evaluation.stopwords = matches!(t, Toggle::On);
        }
        if self.mock {
            cfg.backend.mock = true;
        }
        if let Some(p) = &self.work_dir {
            cfg.work_dir = from_cwd(p.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Failure {
    Usage(anyhow::Error),
    Backend(anyhow::Error),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Incomplete { .. } => Failure::Backend(e.into()),
            other => Failure::Usage(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Backend(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Prepare(common) => {
            let cfg = common.load()?;
            let m = prepare(&cfg)?;
            println!(
                "prepared {} records from {} documents ({} malformed, {} filtered, {} without keyword) -> {}",
                m.records,
                m.ingested,
                m.malformed,
                m.filtered_out,
                m.keyword_failures,
                cfg.records_path().display()
            );
        }
        Command::Generate(common) => {
            let cfg = common.load()?;
            let backend = backend_for(&cfg)?;
            let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
            let outcome = runtime.block_on(run_generation(&cfg, backend.as_ref()))?;
            println!("generated {} concepts -> {}", outcome.concepts.len(), cfg.concepts_path().display());
        }
        Command::Evaluate(common) => {
            let cfg = common.load()?;
            let report = evaluate_run(&cfg)?;
            write_report(&report, &cfg.evaluation_path())?;
            let u = report.uniqueness;
            println!(
                "{} unique of {} concepts (ratio {}) -> {}",
                u.unique,
                u.total,
                u.ratio,
                cfg.evaluation_path().display()
            );
        }
        Command::Report { common, format } => {
            let cfg = common.load()?;
            let report = EvaluationReport::load(&cfg.evaluation_path())?;
            let formats: Vec<ExportFormat> = format
                .iter()
                .map(|f| match f {
                    Format::Csv => ExportFormat::Csv,
                    Format::Json => ExportFormat::Json,
                })
                .collect();
            for path in export_report(&report, &cfg.report_dir(), &formats)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn write_report(report: &EvaluationReport, path: &Path) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
