use crate::corpus::DatasetScan;
use crate::digest::sha256_hex;
use crate::regard::{Breakdown, DisparityComparison, DisparityResult, ShiftCandidate, ThemeDistribution, ToxicityRow};
use crate::rewards::{AgreementResult, BaselineTest, CorrelationResult, SelectionRateResult};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// A persisted file a table was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRef {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

impl ArtifactRef {
    pub fn of(root: &Path, file: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(file)?;
        let rel = file.strip_prefix(root).unwrap_or(file);
        let path = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        Ok(Self {
            path,
            sha256: sha256_hex(&bytes),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub config_digest: String,
    pub model_ids: Vec<String>,
    pub n_boot: usize,
    pub level: f64,
    pub bootstrap_seed: u64,
    pub rewards: Option<RewardSection>,
    pub generations: Option<GenerationSection>,
    pub corpus_scan: Option<ScanSection>,
}

impl AuditReport {
    pub fn empty(config_digest: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config_digest: config_digest.to_string(),
            model_ids: Vec::new(),
            n_boot: 0,
            level: 0.0,
            bootstrap_seed: 0,
            rewards: None,
            generations: None,
            corpus_scan: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSection {
    pub pairs: ArtifactRef,
    pub n_pairs: usize,
    pub n_templates: usize,
    pub target_group: String,
    pub other_group: String,
    pub models: Vec<RewardModelRow>,
    pub agreement: Vec<AgreementResult>,
    /// Model pairs for which agreement was undefined, with the reason.
    pub agreement_notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardModelRow {
    pub name: String,
    pub policy_model: String,
    pub reference_model: String,
    pub comparisons: ArtifactRef,
    pub beta: f64,
    pub selection: SelectionRateResult,
    pub baseline: BaselineTest,
    pub correlation: Option<CorrelationResult>,
    pub correlation_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSection {
    pub n_prompts: usize,
    pub samples_per_prompt: usize,
    pub jaccard_threshold: f64,
    pub models: Vec<GenerationModelRow>,
    /// Disparity with samples pooled across models of the same stage.
    pub pooled: Vec<PooledDisparity>,
    pub comparisons: Vec<ShiftRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationModelRow {
    pub name: String,
    pub stage: String,
    pub model_id: String,
    pub samples: ArtifactRef,
    pub n_samples: usize,
    pub n_filtered: usize,
    pub pct_filtered: f64,
    pub failed_prompts: usize,
    pub failed_classifications: usize,
    pub disparity: Option<DisparityResult>,
    pub disparity_note: Option<String>,
    pub by_identity: Vec<Breakdown>,
    pub by_form_kind: Vec<Breakdown>,
    pub by_group_and_form: Vec<Breakdown>,
    pub toxicity: Option<Vec<ToxicityRow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledDisparity {
    pub stage: String,
    pub models: Vec<String>,
    pub disparity: Option<DisparityResult>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRow {
    pub base: String,
    pub aligned: String,
    pub disparity_change: Option<DisparityComparison>,
    pub note: Option<String>,
    pub prompts_compared: usize,
    pub base_neutral: usize,
    pub n_candidates: usize,
    pub n_sampled: usize,
    pub candidates: Vec<ShiftCandidate>,
    pub annotation_export: Option<ArtifactRef>,
    pub themes: Option<ThemeDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSection {
    pub terms: Vec<String>,
    pub datasets: Vec<ScanRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub dataset_name: String,
    pub records_scanned: usize,
    pub matches: usize,
    pub unreadable: usize,
    pub term_counts: BTreeMap<String, usize>,
    pub source: ArtifactRef,
}

impl ScanRow {
    pub fn from_scan(scan: &DatasetScan, source: ArtifactRef) -> Self {
        Self {
            dataset_name: scan.dataset_name.clone(),
            records_scanned: scan.records_scanned,
            matches: scan.match_count(),
            unreadable: scan.unreadable.len(),
            term_counts: scan.term_counts.clone(),
            source,
        }
    }
}
