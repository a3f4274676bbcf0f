//! Model backends and log-probability scoring.
//!
//! A [`Scorer`] pairs a [`ScorerHandle`] (model id, policy/reference role,
//! context limit) with a [`LanguageBackend`]. [`score_completion`] computes
//! the summed conditional log-probability of a completion given a prompt,
//! consulting a [`ScoreCache`] first; [`generate_samples`] draws
//! continuations under a [`GenerationConfig`].

mod cache;
mod engine;
pub mod remote;
pub mod stub;
mod types;

pub use cache::{CacheKey, CacheStats, ScoreCache};
pub use engine::{log_softmax, sample_token, sampling_rng, LocalEngine, TokenModel};
pub use types::{
    BackendKind, FinishReason, GenerationConfig, GenerationRecord, LogProbRecord, ModelRole,
    RawGeneration, RawScore, ScorerHandle, ScoringParams,
};

use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("completion is empty")]
    EmptyCompletion,
    #[error("input of {tokens} tokens exceeds context limit {limit}")]
    ContextOverflow { tokens: usize, limit: usize },
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("model {model_id:?} does not support {operation}")]
    Unsupported { model_id: String, operation: String },
    #[error("invalid backend response: {0}")]
    InvalidResponse(String),
    #[error("backend error: {0}")]
    Remote(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl ScoringError {
    /// Transient failures worth retrying.
    pub fn is_retryable(&self) -> bool {
        matches!(self, ScoringError::BackendUnavailable(_))
    }
}

/// A text model that can score completions and/or generate continuations.
///
/// Backends that cannot perform an operation return
/// [`ScoringError::Unsupported`].
pub trait LanguageBackend: Send + Sync {
    fn model_id(&self) -> &str;

    fn kind(&self) -> BackendKind;

    fn context_limit(&self) -> usize;

    /// Summed log-probability of `completion` given the fully rendered
    /// `prompt`, plus the number of completion tokens.
    fn score(&self, prompt: &str, completion: &str) -> Result<RawScore, ScoringError>;

    fn score_batch(&self, items: &[(String, String)]) -> Vec<Result<RawScore, ScoringError>> {
        use rayon::prelude::*;
        items.par_iter().map(|(p, c)| self.score(p, c)).collect()
    }

    fn generate(
        &self,
        prompt: &str,
        config: &GenerationConfig,
    ) -> Result<Vec<RawGeneration>, ScoringError> {
        let _ = (prompt, config);
        Err(ScoringError::Unsupported {
            model_id: self.model_id().to_string(),
            operation: "generation".into(),
        })
    }
}

/// A backend bound to a role in the audit.
#[derive(Clone)]
pub struct Scorer {
    pub handle: ScorerHandle,
    pub backend: Arc<dyn LanguageBackend>,
}

impl Scorer {
    pub fn new(role: ModelRole, backend: Arc<dyn LanguageBackend>) -> Self {
        Self {
            handle: ScorerHandle {
                model_id: backend.model_id().to_string(),
                role,
                backend: backend.kind(),
                context_limit: backend.context_limit(),
            },
            backend,
        }
    }
}

impl std::fmt::Debug for Scorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scorer").field("handle", &self.handle).finish()
    }
}

fn validated(
    handle: &ScorerHandle,
    prompt: &str,
    completion: &str,
    params: &ScoringParams,
    raw: RawScore,
) -> Result<LogProbRecord, ScoringError> {
    if !raw.logprob_sum.is_finite() {
        return Err(ScoringError::InvalidResponse(format!(
            "non-finite log-probability {}",
            raw.logprob_sum
        )));
    }
    if raw.logprob_sum > 0.0 {
        return Err(ScoringError::InvalidResponse(format!(
            "positive log-probability {}",
            raw.logprob_sum
        )));
    }
    if raw.token_count == 0 {
        return Err(ScoringError::InvalidResponse("zero completion tokens".into()));
    }
    Ok(LogProbRecord::new(
        &handle.model_id,
        prompt,
        completion,
        raw.logprob_sum,
        raw.token_count,
        params.digest(),
    ))
}

/// Summed log-probability of `completion` conditioned on `prompt`.
///
/// `prompt` is the user-level prompt; any chat wrapper from `params` is
/// applied before the backend sees it. Results are served from and written
/// to `cache` when one is given.
pub fn score_completion(
    scorer: &Scorer,
    prompt: &str,
    completion: &str,
    params: &ScoringParams,
    cache: Option<&ScoreCache>,
) -> Result<LogProbRecord, ScoringError> {
    if completion.is_empty() {
        return Err(ScoringError::EmptyCompletion);
    }
    let key = CacheKey::new(&scorer.handle.model_id, prompt, completion, &params.digest());
    if let Some(hit) = cache.and_then(|c| c.get(&key)) {
        return Ok(hit);
    }
    let raw = scorer.backend.score(&params.render_prompt(prompt), completion)?;
    let record = validated(&scorer.handle, prompt, completion, params, raw)?;
    if let Some(c) = cache {
        c.put(&key, &record)
            .map_err(|e| ScoringError::InvalidConfig(format!("cache write failed: {e}")))?;
    }
    Ok(record)
}

/// Scores many `(prompt, completion)` items, sending only cache misses to
/// the backend in one batch. Output order matches input order.
pub fn score_many(
    scorer: &Scorer,
    items: &[(String, String)],
    params: &ScoringParams,
    cache: Option<&ScoreCache>,
) -> Vec<Result<LogProbRecord, ScoringError>> {
    let digest = params.digest();
    let mut out: Vec<Option<Result<LogProbRecord, ScoringError>>> = vec![None; items.len()];
    let mut misses = Vec::new();
    for (i, (p, c)) in items.iter().enumerate() {
        if c.is_empty() {
            out[i] = Some(Err(ScoringError::EmptyCompletion));
            continue;
        }
        let key = CacheKey::new(&scorer.handle.model_id, p, c, &digest);
        match cache.and_then(|ch| ch.get(&key)) {
            Some(hit) => out[i] = Some(Ok(hit)),
            None => misses.push(i),
        }
    }
    if !misses.is_empty() {
        let batch: Vec<(String, String)> = misses
            .iter()
            .map(|&i| (params.render_prompt(&items[i].0), items[i].1.clone()))
            .collect();
        let results = scorer.backend.score_batch(&batch);
        for (&i, raw) in misses.iter().zip(results) {
            let (p, c) = &items[i];
            let rec = raw.and_then(|r| validated(&scorer.handle, p, c, params, r));
            if let (Ok(r), Some(ch)) = (&rec, cache) {
                let key = CacheKey::new(&scorer.handle.model_id, p, c, &digest);
                if let Err(e) = ch.put(&key, r) {
                    out[i] = Some(Err(ScoringError::InvalidConfig(format!(
                        "cache write failed: {e}"
                    ))));
                    continue;
                }
            }
            out[i] = Some(rec);
        }
    }
    out.into_iter().map(|r| r.expect("every slot filled")).collect()
}

/// Draws `config.samples_per_prompt` continuations of `prompt`.
pub fn generate_samples(
    scorer: &Scorer,
    prompt: &str,
    config: &GenerationConfig,
) -> Result<Vec<GenerationRecord>, ScoringError> {
    config.validate()?;
    let raw = scorer.backend.generate(prompt, config)?;
    if raw.len() != config.samples_per_prompt {
        return Err(ScoringError::InvalidResponse(format!(
            "expected {} samples, got {}",
            config.samples_per_prompt,
            raw.len()
        )));
    }
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(i, g)| GenerationRecord {
            model_id: scorer.handle.model_id.clone(),
            prompt: prompt.to_string(),
            sample_index: i,
            text: g.text,
            finish_reason: g.finish_reason,
        })
        .collect())
}
