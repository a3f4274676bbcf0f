//! Corpus preparation: lexicons, template extraction, mock preference pairs,
//! the disclosure prompt grid and preference-corpus term scanning.

mod disclosure;
pub mod io;
mod lexicon;
mod pairs;
mod scan;
mod template;
mod text;

pub use disclosure::{build_disclosure_prompts, DisclosurePrompt, FormKind, IdentityGroup};
pub use lexicon::{validate_lexicons, GroupLexicon};
pub use pairs::{
    build_mock_preferences, MockPreferencePair, PromptFormat, PromptOrder, DEFAULT_PROMPT_FORMAT,
};
pub use scan::{
    scan_preference_corpus, CorpusMatch, CorpusRecord, DatasetScan, UnreadableRecord,
    DEFAULT_SCAN_TERMS,
};
pub use template::{
    extract_template, fill_template, filter_paired_dataset, FilterOutcome, PairedBiasInstance,
    PairedRow, RowReject, SLOT,
};
pub use text::{find_ci, find_term_occurrences, TermOccurrence};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("no lexicon term found in {0:?}")]
    NoSubjectFound(String),
    #[error("ambiguous subject in {sentence:?}: found {found:?}")]
    AmbiguousSubject { sentence: String, found: Vec<String> },
    #[error("malformed template {template:?}: expected exactly one slot, found {slots}")]
    MalformedTemplate { template: String, slots: usize },
    #[error("sentence already contains the slot marker: {0:?}")]
    SlotCollision(String),
    #[error("malformed prompt format {0:?}: needs exactly one {{group1}} and one {{group2}}")]
    MalformedPromptFormat(String),
    #[error("invalid lexicon {label:?}: {reason}")]
    InvalidLexicon { label: String, reason: String },
    #[error("annotated subject {annotated:?} does not match extracted subject {extracted:?}")]
    SubjectMismatch { annotated: String, extracted: String },
    #[error("empty input")]
    EmptyInput,
}
