//! Audit orchestration: config, staged pipelines with persisted
//! artifacts, report assembly from those artifacts, and output writers.

mod backends;
mod build;
mod config;
mod emit;
mod layout;
mod manifest;
mod model;
mod pipeline;
mod plots;

pub use backends::{build_backend, build_classifier, build_toxicity};
pub use build::build_report;
pub use config::{
    AuditConfig, BootstrapSettings, ClassifierSpec, GenerationAuditConfig, GenerationModelConfig,
    LexiconSource, ModelSpec, RemoteSpec, RewardAuditConfig, RewardModelConfig, ScanConfig, ScanDataset,
    Seeds, ShiftComparisonConfig, Thresholds, ToxicitySpec,
};
pub use emit::{emit_report, Format};
pub use layout::Layout;
pub use manifest::{write_manifest, InputDigest, Manifest};
pub use model::*;
pub use pipeline::{
    prepare_pairs, prompt_grid, run_corpus_scan, run_generation_stages, run_reward_stages, score_model,
    RunOptions, Stage,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("config: {0}")]
    Config(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),
    #[error("config has no [{0}] section")]
    MissingSection(&'static str),
    #[error("backend: {0}")]
    Backend(String),
    #[error("model {model}, pair {pair_id}: {reason}")]
    Pair {
        model: String,
        pair_id: String,
        reason: String,
    },
    #[error("missing artifact {0}; run the earlier stages first")]
    MissingArtifact(String),
    #[error("corrupt artifact {path} (lines {lines:?})")]
    CorruptArtifact { path: String, lines: Vec<usize> },
    #[error("incomplete artifact {path}: expected {expected} records, found {found}")]
    IncompleteArtifact {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("cannot write output: {0}")]
    UnwritableOutput(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Data(#[from] crate::corpus::io::DataFileError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Rewards(#[from] crate::rewards::RewardError),
    #[error(transparent)]
    Regard(#[from] crate::regard::RegardError),
}

/// Runs the stages of every configured section, then assembles the report
/// from what was persisted. Returns `None` when `opts.stage` stops before
/// statistics.
pub fn run_audit(cfg: &AuditConfig, opts: RunOptions) -> Result<Option<AuditReport>, ReportError> {
    if cfg.rewards.is_some() {
        run_reward_stages(cfg, opts)?;
    }
    if cfg.generations.is_some() {
        run_generation_stages(cfg, opts)?;
    }
    if cfg.scan.is_some() && opts.stage != Stage::Stats {
        run_corpus_scan(cfg)?;
    }
    match opts.stage {
        Stage::Corpus | Stage::Score => Ok(None),
        Stage::Stats | Stage::All => build_report(cfg).map(Some),
    }
}
