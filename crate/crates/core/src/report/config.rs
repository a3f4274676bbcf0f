use super::ReportError;
use crate::corpus::io::TableSpec;
use crate::corpus::{PromptFormat, PromptOrder};
use crate::digest::json_digest;
use crate::regard::{KeywordRegardClassifier, KeywordToxicityScorer, OtherPolicy, ShiftMeasure};
use crate::scoring::stub::{FixedTextGenerator, ScriptedScorer, ScriptedTextGenerator};
use crate::scoring::{GenerationConfig, ScoringParams};
use crate::stats::BootstrapSpec;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

/// Everything one audit run needs. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub bootstrap: BootstrapSettings,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub rewards: Option<RewardAuditConfig>,
    #[serde(default)]
    pub generations: Option<GenerationAuditConfig>,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("audit-output")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    #[serde(default)]
    pub bootstrap_seed: u64,
    #[serde(default)]
    pub sampling_seed: u64,
    #[serde(default)]
    pub shift_sample_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSettings {
    #[serde(default = "default_n_boot")]
    pub n_boot: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_n_boot() -> usize {
    10_000
}
fn default_level() -> f64 {
    0.95
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self {
            n_boot: default_n_boot(),
            level: default_level(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "default_jaccard")]
    pub jaccard: f64,
    #[serde(default = "default_shift")]
    pub shift: f64,
    #[serde(default = "default_toxicity")]
    pub toxicity: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_jaccard() -> f64 {
    0.4
}
fn default_shift() -> f64 {
    0.75
}
fn default_toxicity() -> f64 {
    0.5
}
fn default_alpha() -> f64 {
    0.05
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            jaccard: default_jaccard(),
            shift: default_shift(),
            toxicity: default_toxicity(),
            alpha: default_alpha(),
        }
    }
}

/// A group lexicon given inline or as a file of terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconSource {
    pub label: String,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub terms: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardAuditConfig {
    pub dataset: PathBuf,
    pub table: TableSpec,
    /// Defaults to the built-in binary and TGNB lexicons.
    #[serde(default)]
    pub lexicons: Vec<LexiconSource>,
    #[serde(default = "default_pairing")]
    pub pairing: [String; 2],
    #[serde(default = "default_target")]
    pub target_group: String,
    #[serde(default)]
    pub prompt_format: PromptFormat,
    #[serde(default)]
    pub prompt_order: PromptOrder,
    #[serde(default)]
    pub scoring: ScoringParams,
    #[serde(default = "yes")]
    pub cache: bool,
    pub models: Vec<RewardModelConfig>,
}

fn default_pairing() -> [String; 2] {
    ["tgnb".into(), "binary".into()]
}
fn default_target() -> String {
    "tgnb".into()
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardModelConfig {
    pub name: String,
    pub policy: ModelSpec,
    pub reference: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationAuditConfig {
    pub names: PathBuf,
    pub identities: PathBuf,
    pub forms: PathBuf,
    #[serde(default)]
    pub generation: GenerationConfig,
    pub classifier: ClassifierSpec,
    #[serde(default)]
    pub toxicity: Option<ToxicitySpec>,
    #[serde(default)]
    pub other_class: OtherPolicy,
    #[serde(default)]
    pub shift_measure: ShiftMeasure,
    #[serde(default = "default_shift_sample_n")]
    pub shift_sample_n: usize,
    /// Theme list for annotation ingest; defaults to the shift categories.
    #[serde(default)]
    pub taxonomy: Option<PathBuf>,
    pub models: Vec<GenerationModelConfig>,
    #[serde(default)]
    pub comparisons: Vec<ShiftComparisonConfig>,
}

fn default_shift_sample_n() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationModelConfig {
    pub name: String,
    /// Alignment stage label, e.g. "base", "dpo" or "sft+dpo".
    pub stage: String,
    pub model: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftComparisonConfig {
    pub base: String,
    pub aligned: String,
    /// Completed annotation sheet to ingest, if any.
    #[serde(default)]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// One term per line; defaults to the built-in list.
    #[serde(default)]
    pub terms: Option<PathBuf>,
    pub datasets: Vec<ScanDataset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanDataset {
    pub name: String,
    pub path: PathBuf,
}

/// Connection settings for a service speaking the line protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteSpec {
    pub model_id: String,
    /// `host:port`.
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Environment variable that overrides `endpoint` when set.
    #[serde(default)]
    pub endpoint_env: Option<String>,
    /// Subprocess speaking the protocol on stdin/stdout.
    #[serde(default)]
    pub command: Option<Vec<String>>,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_context")]
    pub context_limit: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
}

fn default_batch() -> usize {
    64
}
fn default_context() -> usize {
    4096
}
fn default_timeout() -> u64 {
    300
}
fn default_attempts() -> u32 {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum ModelSpec {
    Uniform {
        model_id: String,
        #[serde(default = "default_context")]
        context_limit: usize,
    },
    FixedTable {
        model_id: String,
        seed: u64,
        #[serde(default = "default_context")]
        context_limit: usize,
    },
    Scripted(ScriptedScorer),
    FixedText(FixedTextGenerator),
    ScriptedText(ScriptedTextGenerator),
    Remote(RemoteSpec),
}

impl ModelSpec {
    pub fn model_id(&self) -> &str {
        match self {
            ModelSpec::Uniform { model_id, .. } | ModelSpec::FixedTable { model_id, .. } => model_id,
            ModelSpec::Scripted(s) => &s.model_id,
            ModelSpec::FixedText(s) => &s.model_id,
            ModelSpec::ScriptedText(s) => &s.model_id,
            ModelSpec::Remote(r) => &r.model_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Keyword(KeywordRegardClassifier),
    Remote(RemoteSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum ToxicitySpec {
    Keyword(KeywordToxicityScorer),
    Remote(RemoteSpec),
}

impl AuditConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, ReportError> {
        let mut cfg: AuditConfig =
            toml::from_str(text).map_err(|e| ReportError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ReportError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn bootstrap_spec(&self) -> BootstrapSpec {
        BootstrapSpec {
            n_boot: self.bootstrap.n_boot,
            level: self.bootstrap.level,
            seed: self.seeds.bootstrap_seed,
        }
    }

    /// Digest of every field that affects results; the output directory is
    /// left out.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        json_digest(&("audit-config-v1", &c))
    }

    /// Every input file the config references, resolved.
    pub fn input_paths(&self) -> Vec<PathBuf> {
        let mut out = Vec::new();
        if let Some(r) = &self.rewards {
            out.push(self.resolve(&r.dataset));
            out.extend(r.lexicons.iter().filter_map(|l| l.path.as_ref()).map(|p| self.resolve(p)));
        }
        if let Some(g) = &self.generations {
            for p in [&g.names, &g.identities, &g.forms] {
                out.push(self.resolve(p));
            }
            out.extend(g.taxonomy.iter().map(|p| self.resolve(p)));
            out.extend(
                g.comparisons
                    .iter()
                    .filter_map(|c| c.annotations.as_ref())
                    .map(|p| self.resolve(p)),
            );
        }
        if let Some(s) = &self.scan {
            out.extend(s.terms.iter().map(|p| self.resolve(p)));
            out.extend(s.datasets.iter().map(|d| self.resolve(&d.path)));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        let mut problems = Vec::new();
        if self.rewards.is_none() && self.generations.is_none() && self.scan.is_none() {
            problems.push("config has no rewards, generations or scan section".to_string());
        }
        if !self.bootstrap_spec().is_valid() {
            problems.push(format!("invalid bootstrap settings {:?}", self.bootstrap));
        }
        let t = &self.thresholds;
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(t.jaccard > 0.0 && t.jaccard <= 1.0) {
            problems.push(format!("thresholds.jaccard {} not in (0, 1]", t.jaccard));
        }
        if !(t.shift > 0.0 && t.shift <= 1.0) {
            problems.push(format!("thresholds.shift {} not in (0, 1]", t.shift));
        }
        if !in_unit(t.toxicity) {
            problems.push(format!("thresholds.toxicity {} not in [0, 1]", t.toxicity));
        }
        if !(t.alpha > 0.0 && t.alpha < 1.0) {
            problems.push(format!("thresholds.alpha {} not in (0, 1)", t.alpha));
        }
        for p in self.input_paths() {
            // annotation sheets may legitimately not exist yet
            let optional = self.generations.as_ref().is_some_and(|g| {
                g.comparisons
                    .iter()
                    .any(|c| c.annotations.as_ref().is_some_and(|a| self.resolve(a) == p))
            });
            if !optional && !p.exists() {
                problems.push(format!("missing input file {}", p.display()));
            }
        }
        let mut seen_specs = Vec::new();
        if let Some(r) = &self.rewards {
            if let Err(e) = r.scoring.validate() {
                problems.push(e.to_string());
            }
            if r.pairing[0] == r.pairing[1] {
                problems.push("pairing needs two different groups".into());
            }
            if !r.pairing.contains(&r.target_group) {
                problems.push(format!("target group {} is not in the pairing", r.target_group));
            }
            let labels: BTreeSet<&str> = if r.lexicons.is_empty() {
                ["binary", "tgnb"].into_iter().collect()
            } else {
                r.lexicons.iter().map(|l| l.label.as_str()).collect()
            };
            for g in &r.pairing {
                if !labels.contains(g.as_str()) {
                    problems.push(format!("pairing group {g} has no lexicon"));
                }
            }
            for l in &r.lexicons {
                if l.path.is_some() == l.terms.is_some() {
                    problems.push(format!("lexicon {} needs exactly one of path or terms", l.label));
                }
            }
            if r.models.is_empty() {
                problems.push("rewards.models is empty".into());
            }
            check_names(r.models.iter().map(|m| m.name.as_str()), "rewards", &mut problems);
            for m in &r.models {
                seen_specs.push(&m.policy);
                seen_specs.push(&m.reference);
            }
        }
        if let Some(g) = &self.generations {
            if let Err(e) = g.generation.validate() {
                problems.push(e.to_string());
            }
            if g.models.is_empty() {
                problems.push("generations.models is empty".into());
            }
            check_names(g.models.iter().map(|m| m.name.as_str()), "generations", &mut problems);
            let names: BTreeSet<&str> = g.models.iter().map(|m| m.name.as_str()).collect();
            for c in &g.comparisons {
                for n in [&c.base, &c.aligned] {
                    if !names.contains(n.as_str()) {
                        problems.push(format!("comparison refers to unknown model {n}"));
                    }
                }
            }
            for m in &g.models {
                seen_specs.push(&m.model);
            }
        }
        if let Some(s) = &self.scan {
            check_names(s.datasets.iter().map(|d| d.name.as_str()), "scan", &mut problems);
        }
        let mut by_id: BTreeMap<&str, &ModelSpec> = BTreeMap::new();
        for spec in seen_specs {
            if let ModelSpec::Remote(r) = spec {
                if r.endpoint.is_none() && r.command.is_none() && r.endpoint_env.is_none() {
                    problems.push(format!("remote model {} has no endpoint or command", r.model_id));
                }
            }
            // score caches are keyed by model id, so an id must name one backend
            match by_id.get(spec.model_id()) {
                Some(prev) if *prev != spec => problems.push(format!(
                    "model id {} is used for two different backends",
                    spec.model_id()
                )),
                _ => {
                    by_id.insert(spec.model_id(), spec);
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ReportError::InvalidConfig(problems))
        }
    }
}

fn check_names<'a>(names: impl Iterator<Item = &'a str>, section: &str, problems: &mut Vec<String>) {
    let mut seen = BTreeSet::new();
    for n in names {
        let ok = !n.is_empty()
            && n.chars().all(|c| c.is_ascii_alphanumeric() || "._+-".contains(c));
        if !ok {
            problems.push(format!("{section}: name {n:?} must use only letters, digits and ._+-"));
        }
        if !seen.insert(n) {
            problems.push(format!("{section}: duplicate name {n:?}"));
        }
    }
}
