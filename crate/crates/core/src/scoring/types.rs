use super::ScoringError;
use crate::digest::json_digest;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelRole {
    Policy,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    LocalEngine,
    RemoteService,
    Stub,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerHandle {
    pub model_id: String,
    pub role: ModelRole,
    pub backend: BackendKind,
    pub context_limit: usize,
}

/// DPO temperature and optional chat wrapper.
///
/// `prompt_template`, when set, must contain `{prompt}`; the completion is
/// appended directly after the rendered template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringParams {
    pub beta: f64,
    #[serde(default)]
    pub prompt_template: Option<String>,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            prompt_template: None,
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<(), ScoringError> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(ScoringError::InvalidConfig(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if let Some(t) = &self.prompt_template {
            if !t.contains("{prompt}") {
                return Err(ScoringError::InvalidConfig(
                    "prompt_template must contain {prompt}".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn render_prompt(&self, prompt: &str) -> String {
        match &self.prompt_template {
            Some(t) => t.replacen("{prompt}", prompt, 1),
            None => prompt.to_string(),
        }
    }

    /// Digest over the fields that change a log-probability. `beta` only
    /// rescales rewards afterwards, so it is excluded and cached scores are
    /// shared across temperatures.
    pub fn digest(&self) -> String {
        json_digest(&("scoring-v1", &self.prompt_template))
    }
}

/// Summed conditional log-probability of one completion under one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProbRecord {
    pub model_id: String,
    pub prompt: String,
    pub completion: String,
    /// Nats, no length normalisation.
    pub logprob_sum: f64,
    pub completion_token_count: usize,
    pub params_digest: String,
    /// Diagnostic only; never used for selection.
    pub mean_token_logprob: f64,
}

impl LogProbRecord {
    pub fn new(
        model_id: &str,
        prompt: &str,
        completion: &str,
        logprob_sum: f64,
        completion_token_count: usize,
        params_digest: String,
    ) -> Self {
        Self {
            model_id: model_id.to_string(),
            prompt: prompt.to_string(),
            completion: completion.to_string(),
            logprob_sum,
            completion_token_count,
            params_digest,
            mean_token_logprob: logprob_sum / completion_token_count as f64,
        }
    }
}

/// What a backend returns for one scoring request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawScore {
    pub logprob_sum: f64,
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Length,
    Stop,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGeneration {
    pub text: String,
    pub finish_reason: FinishReason,
}

/// Decoding settings. Defaults are the disclosure-audit configuration:
/// temperature 1, nucleus top-p 0.95, repetition penalty 1.03, up to 200
/// new tokens, 5 samples per prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub repetition_penalty: f64,
    pub max_new_tokens: usize,
    pub samples_per_prompt: usize,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            top_p: 0.95,
            repetition_penalty: 1.03,
            max_new_tokens: 200,
            samples_per_prompt: 5,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), ScoringError> {
        let bad = |m: String| Err(ScoringError::InvalidConfig(m));
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p must be in (0, 1], got {}", self.top_p));
        }
        if !(self.repetition_penalty.is_finite() && self.repetition_penalty > 0.0) {
            return bad(format!(
                "repetition_penalty must be positive, got {}",
                self.repetition_penalty
            ));
        }
        if self.max_new_tokens == 0 {
            return bad("max_new_tokens must be >= 1".into());
        }
        if self.samples_per_prompt == 0 {
            return bad("samples_per_prompt must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub model_id: String,
    pub prompt: String,
    pub sample_index: usize,
    /// Continuation only; the prompt is not repeated.
    pub text: String,
    pub finish_reason: FinishReason,
}
