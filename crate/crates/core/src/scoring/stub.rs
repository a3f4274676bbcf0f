//! Deterministic stand-in models. They make the whole pipeline runnable and
//! checkable without real checkpoints.

use super::engine::{sampling_rng, TokenModel};
use super::{
    BackendKind, FinishReason, GenerationConfig, LanguageBackend, RawGeneration, RawScore,
    ScoringError,
};
use crate::corpus::find_ci;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One token per UTF-8 byte.
fn byte_encode(text: &str) -> Vec<u32> {
    text.bytes().map(u32::from).collect()
}

fn byte_decode(tokens: &[u32]) -> String {
    let bytes: Vec<u8> = tokens.iter().map(|&t| t as u8).collect();
    String::from_utf8_lossy(&bytes).into_owned()
}

/// Uniform next-token distribution over 256 byte tokens: a completion of
/// `k` bytes scores exactly `k * ln(1/256)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformModel;

impl UniformModel {
    pub const VOCAB: usize = 256;
}

impl TokenModel for UniformModel {
    fn vocab_size(&self) -> usize {
        Self::VOCAB
    }
    fn encode(&self, text: &str) -> Vec<u32> {
        byte_encode(text)
    }
    fn decode(&self, tokens: &[u32]) -> String {
        byte_decode(tokens)
    }
    fn next_logits(&self, _context: &[u32]) -> Vec<f64> {
        vec![0.0; Self::VOCAB]
    }
}

/// Context-independent byte distribution drawn once from a seed.
#[derive(Debug, Clone)]
pub struct FixedTableModel {
    logits: Vec<f64>,
}

impl FixedTableModel {
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            logits: (0..256).map(|_| rng.gen_range(-4.0..4.0)).collect(),
        }
    }

    pub fn from_logits(logits: Vec<f64>) -> Self {
        assert_eq!(logits.len(), 256, "byte vocabulary");
        Self { logits }
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }
}

impl TokenModel for FixedTableModel {
    fn vocab_size(&self) -> usize {
        256
    }
    fn encode(&self, text: &str) -> Vec<u32> {
        byte_encode(text)
    }
    fn decode(&self, tokens: &[u32]) -> String {
        byte_decode(tokens)
    }
    fn next_logits(&self, _context: &[u32]) -> Vec<f64> {
        self.logits.clone()
    }
}

/// Adds `offset` nats when the completion contains `contains`
/// (case-insensitive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRule {
    pub contains: String,
    pub offset: f64,
}

/// Rule-driven scorer for scripted audits.
///
/// `log p = per_token * words + sum(matching rule offsets) - jitter * u`,
/// where `words` is the whitespace word count of the completion and `u` in
/// `[0, 1)` is a hash of `(seed, prompt, completion)`. The result is capped
/// at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedScorer {
    pub model_id: String,
    pub per_token: f64,
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rules: Vec<ScoreRule>,
    #[serde(default = "default_context_limit")]
    pub context_limit: usize,
}

pub(crate) fn default_context_limit() -> usize {
    4096
}

pub(crate) fn unit_hash(seed: u64, parts: &[&str]) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let d = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&d[..8]);
    (u64::from_le_bytes(b) >> 11) as f64 / (1u64 << 53) as f64
}

impl ScriptedScorer {
    pub fn new(model_id: impl Into<String>, per_token: f64) -> Self {
        Self {
            model_id: model_id.into(),
            per_token,
            jitter: 0.0,
            seed: 0,
            rules: Vec::new(),
            context_limit: default_context_limit(),
        }
    }

    pub fn with_jitter(mut self, jitter: f64, seed: u64) -> Self {
        self.jitter = jitter;
        self.seed = seed;
        self
    }

    pub fn with_rule(mut self, contains: impl Into<String>, offset: f64) -> Self {
        self.rules.push(ScoreRule {
            contains: contains.into(),
            offset,
        });
        self
    }
}

impl LanguageBackend for ScriptedScorer {
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn kind(&self) -> BackendKind {
        BackendKind::Stub
    }
    fn context_limit(&self) -> usize {
        self.context_limit
    }

    fn score(&self, prompt: &str, completion: &str) -> Result<RawScore, ScoringError> {
        let words = completion.split_whitespace().count();
        if words == 0 {
            return Err(ScoringError::EmptyCompletion);
        }
        let total_words = prompt.split_whitespace().count() + words;
        if total_words > self.context_limit {
            return Err(ScoringError::ContextOverflow {
                tokens: total_words,
                limit: self.context_limit,
            });
        }
        let mut lp = self.per_token * words as f64;
        for r in &self.rules {
            if find_ci(completion, &r.contains).is_some() {
                lp += r.offset;
            }
        }
        if self.jitter != 0.0 {
            lp -= self.jitter * unit_hash(self.seed, &[prompt, completion]);
        }
        Ok(RawScore {
            logprob_sum: lp.min(0.0),
            token_count: words,
        })
    }
}

/// Always continues with the same text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedTextGenerator {
    pub model_id: String,
    pub text: String,
}

impl LanguageBackend for FixedTextGenerator {
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn kind(&self) -> BackendKind {
        BackendKind::Stub
    }
    fn context_limit(&self) -> usize {
        default_context_limit()
    }
    fn score(&self, _prompt: &str, _completion: &str) -> Result<RawScore, ScoringError> {
        Err(ScoringError::Unsupported {
            model_id: self.model_id.clone(),
            operation: "scoring".into(),
        })
    }
    fn generate(
        &self,
        _prompt: &str,
        config: &GenerationConfig,
    ) -> Result<Vec<RawGeneration>, ScoringError> {
        Ok(vec![
            RawGeneration {
                text: self.text.clone(),
                finish_reason: FinishReason::Stop,
            };
            config.samples_per_prompt
        ])
    }
}

/// Picks continuations from the first rule whose `prompt_contains` occurs
/// in the prompt (case-insensitive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRule {
    pub prompt_contains: String,
    pub continuations: Vec<String>,
}

/// Scripted generator. Sample `i` takes `continuations[i % len]`, or a
/// seeded uniform pick when `shuffle` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedTextGenerator {
    pub model_id: String,
    #[serde(default)]
    pub rules: Vec<GenerationRule>,
    pub default: Vec<String>,
    #[serde(default)]
    pub shuffle: bool,
}

impl LanguageBackend for ScriptedTextGenerator {
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn kind(&self) -> BackendKind {
        BackendKind::Stub
    }
    fn context_limit(&self) -> usize {
        default_context_limit()
    }
    fn score(&self, _prompt: &str, _completion: &str) -> Result<RawScore, ScoringError> {
        Err(ScoringError::Unsupported {
            model_id: self.model_id.clone(),
            operation: "scoring".into(),
        })
    }
    fn generate(
        &self,
        prompt: &str,
        config: &GenerationConfig,
    ) -> Result<Vec<RawGeneration>, ScoringError> {
        let pool = self
            .rules
            .iter()
            .find(|r| find_ci(prompt, &r.prompt_contains).is_some())
            .map_or(&self.default, |r| &r.continuations);
        if pool.is_empty() {
            return Err(ScoringError::InvalidConfig(format!(
                "{}: no continuations for prompt {prompt:?}",
                self.model_id
            )));
        }
        Ok((0..config.samples_per_prompt)
            .map(|i| {
                let idx = if self.shuffle {
                    sampling_rng(config.seed, prompt, i).gen_range(0..pool.len())
                } else {
                    i % pool.len()
                };
                RawGeneration {
                    text: pool[idx].clone(),
                    finish_reason: FinishReason::Stop,
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_rules_and_cap() {
        let s = ScriptedScorer::new("m", -1.0)
            .with_rule("Transgender", 0.5)
            .with_rule("people", 10.0);
        let r = s.score("p", "transgender folks").unwrap();
        assert_eq!(r.token_count, 2);
        assert_eq!(r.logprob_sum, -1.5);
        // would be positive without the cap
        assert_eq!(s.score("p", "people").unwrap().logprob_sum, 0.0);
        assert_eq!(s.score("p", "   "), Err(ScoringError::EmptyCompletion));
    }

    #[test]
    fn jitter_is_deterministic_and_bounded() {
        let s = ScriptedScorer::new("m", -1.0).with_jitter(0.5, 9);
        let a = s.score("p", "a b").unwrap().logprob_sum;
        assert_eq!(a, s.score("p", "a b").unwrap().logprob_sum);
        assert!(a <= -2.0 && a > -2.5);
    }

    #[test]
    fn scripted_generator_cycles() {
        let g = ScriptedTextGenerator {
            model_id: "g".into(),
            rules: vec![GenerationRule {
                prompt_contains: "fluid".into(),
                continuations: vec!["x".into(), "y".into()],
            }],
            default: vec!["d".into()],
            shuffle: false,
        };
        let cfg = GenerationConfig {
            samples_per_prompt: 3,
            ..Default::default()
        };
        let out: Vec<_> = g
            .generate("Alex is genderfluid and", &cfg)
            .unwrap()
            .into_iter()
            .map(|r| r.text)
            .collect();
        assert_eq!(out, ["x", "y", "x"]);
        assert_eq!(g.generate("Alex is a man and", &cfg).unwrap()[2].text, "d");
    }
}
