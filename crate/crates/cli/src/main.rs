use anyhow::{bail, Context, Result};
use bias_audit::report::{
    build_report, emit_report, run_corpus_scan, run_generation_stages, run_reward_stages, write_manifest,
    AuditConfig, Format, RunOptions, Stage,
};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::time::Instant;
use tracing::info;

#[derive(Parser)]
#[command(name = "bias-audit", version, about = "Audit reward signals and generations for gender-identity bias")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pair templates, score them with every configured model and compute
    /// selection statistics.
    AuditRewards(RunArgs),
    /// Generate continuations for the disclosure prompt grid, classify them
    /// and compute regard statistics.
    AuditGenerations(RunArgs),
    /// Count TGNB term matches in preference corpora.
    ScanCorpus(CommonArgs),
    /// Rebuild the report from persisted artifacts only.
    Report(CommonArgs),
    /// Check the config and print its digest.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Comma-separated: json, csv, markdown, plots.
    #[arg(long, default_value = "json,csv,markdown,plots")]
    format: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// corpus, score, stats or all.
    #[arg(long, default_value = "all")]
    stage: Stage,
    /// Reuse finished work from an interrupted run.
    #[arg(long)]
    resume: bool,
}

fn load(common: &CommonArgs) -> Result<(AuditConfig, Vec<Format>)> {
    let mut cfg = AuditConfig::load(&common.config)?;
    if let Some(dir) = &common.output_dir {
        // relative to the working directory, not the config file
        cfg.output_dir = std::env::current_dir()?.join(dir);
    }
    cfg.validate()?;
    let formats = Format::parse_list(&common.format).map_err(anyhow::Error::msg)?;
    Ok((cfg, formats))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn finish(cfg: &AuditConfig, formats: &[Format], command: &str, started: &str, stats: bool) -> Result<()> {
    if stats {
        let t = Instant::now();
        let report = build_report(cfg)?;
        let files = emit_report(&report, &cfg.output_path(), formats)?;
        info!(files = files.len(), elapsed_ms = t.elapsed().as_millis() as u64, "report written");
    }
    let manifest = write_manifest(cfg, command, started, &now())?;
    info!(path = %manifest.display(), "manifest written");
    println!("{}", cfg.output_path().display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let started = now();
    match cli.command {
        Command::AuditRewards(a) => {
            let (cfg, formats) = load(&a.common)?;
            if cfg.rewards.is_none() {
                bail!("config has no [rewards] section");
            }
            let opts = RunOptions { stage: a.stage, resume: a.resume };
            run_reward_stages(&cfg, opts)?;
            finish(&cfg, &formats, "audit-rewards", &started, matches!(a.stage, Stage::Stats | Stage::All))
        }
        Command::AuditGenerations(a) => {
            let (cfg, formats) = load(&a.common)?;
            if cfg.generations.is_none() {
                bail!("config has no [generations] section");
            }
            let opts = RunOptions { stage: a.stage, resume: a.resume };
            run_generation_stages(&cfg, opts)?;
            finish(&cfg, &formats, "audit-generations", &started, matches!(a.stage, Stage::Stats | Stage::All))
        }
        Command::ScanCorpus(c) => {
            let (cfg, formats) = load(&c)?;
            if cfg.scan.is_none() {
                bail!("config has no [scan] section");
            }
            run_corpus_scan(&cfg)?;
            finish(&cfg, &formats, "scan-corpus", &started, true)
        }
        Command::Report(c) => {
            let (cfg, formats) = load(&c)?;
            finish(&cfg, &formats, "report", &started, true)
        }
        Command::ValidateConfig { config } => {
            let cfg = AuditConfig::load(&config)?;
            cfg.validate()
                .with_context(|| format!("{} is not a valid audit config", config.display()))?;
            println!("ok {}", cfg.digest());
            Ok(())
        }
    }
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("BIAS_AUDIT_LOG").unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
