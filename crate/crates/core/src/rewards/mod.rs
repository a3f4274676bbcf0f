//! Implicit rewards over mock preference pairs and the statistics built on
//! them: selection rates, baseline tests, bias-transfer correlation and
//! inter-model agreement.

mod agreement;
mod compare;
mod correlation;
mod selection;

pub use agreement::{agreement, agreement_matrix, cohen_kappa, AgreementResult};
pub use compare::{compare_pair, implicit_reward, PairScores, RewardComparison, Selection};
pub use correlation::{bias_transfer, point_biserial, CorrelationResult};
pub use selection::{
    baseline_significance, selection_rate, selection_values, BaselineTest, SelectionRateResult,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("beta must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("pair {pair_id}: missing {which} score")]
    MissingScore { pair_id: String, which: String },
    #[error("empty input")]
    EmptyInput,
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("invalid bootstrap settings: {0}")]
    InvalidBootstrap(String),
}
