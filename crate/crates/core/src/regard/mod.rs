//! Generation-side audit: echo filtering, regard and toxicity
//! classification, group disparities, narrative-shift detection and the
//! annotation round-trip.

mod annotation;
mod classify;
mod disparity;
mod distribution;
mod jaccard;
mod sample;
mod shift;
mod toxicity;

pub use annotation::{
    annotation_items, export_annotation_sample, ingest_annotations, AnnotationItem,
    AnnotationRecord, Taxonomy, ThemeDistribution, ThemeShare,
};
pub use classify::{
    classify_regard, score_toxicity, KeywordRegardClassifier, KeywordToxicityScorer,
    RegardClassifier, RegardRule, RemoteRegardClassifier, RemoteToxicityScorer, ToxicityRule,
    ToxicityScorer,
};
pub use disparity::{
    breakdown_by, compare_disparity, disparity, pct_negative, Breakdown, DisparityComparison,
    DisparityResult,
};
pub use distribution::{OtherPolicy, RegardDistribution, RegardLabel};
pub use jaccard::{filter_echoes, jaccard, word_set};
pub use sample::{GeneratedSample, RegardSample};
pub use shift::{detect_shift, PromptKey, ShiftCandidate, ShiftConfig, ShiftMeasure, ShiftOutcome};
pub use toxicity::{toxicity_proportion, ToxicityRow};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegardError {
    #[error("cannot classify empty text")]
    EmptyText,
    #[error("classifier unavailable: {0}")]
    ClassifierUnavailable(String),
    #[error("invalid classifier output: {0}")]
    InvalidDistribution(String),
    #[error("no unfiltered samples for group {0}")]
    EmptyGroup(String),
    #[error("base and aligned samples share no prompt")]
    NoMatchingPrompts,
    #[error("{0} samples lack a toxicity score")]
    MissingScores(usize),
    #[error("no candidates to export")]
    EmptyExport,
    #[error("theme {theme:?} is not in taxonomy {taxonomy:?}")]
    UnknownTheme { theme: String, taxonomy: String },
    #[error("sample id {0:?} was not exported")]
    UnknownSampleId(String),
    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),
    #[error("invalid bootstrap settings: {0}")]
    InvalidBootstrap(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
