//! Token-level scoring and nucleus sampling over any autoregressive model
//! exposing next-token logits.

use super::{
    BackendKind, FinishReason, GenerationConfig, LanguageBackend, RawGeneration, RawScore,
    ScoringError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Minimal interface to an autoregressive model.
pub trait TokenModel: Send + Sync {
    fn vocab_size(&self) -> usize;
    fn encode(&self, text: &str) -> Vec<u32>;
    fn decode(&self, tokens: &[u32]) -> String;
    /// Unnormalised scores for the token following `context`.
    fn next_logits(&self, context: &[u32]) -> Vec<f64>;
    fn eos(&self) -> Option<u32> {
        None
    }
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// Generator for one (seed, prompt, sample) triple, so every sample is
/// reproducible on its own regardless of batching order.
pub fn sampling_rng(seed: u64, prompt: &str, sample_index: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((sample_index as u64).to_le_bytes());
    h.update(prompt.as_bytes());
    let out = h.finalize();
    ChaCha8Rng::from_seed(out.into())
}

/// Draws one token: repetition penalty over `context`, temperature scaling,
/// then nucleus (top-p) truncation. Temperature 0 is greedy.
pub fn sample_token<R: Rng>(
    logits: &[f64],
    context: &[u32],
    config: &GenerationConfig,
    rng: &mut R,
) -> u32 {
    let mut logits = logits.to_vec();
    if config.repetition_penalty != 1.0 {
        let mut seen = vec![false; logits.len()];
        for &t in context {
            if let Some(s) = seen.get_mut(t as usize) {
                *s = true;
            }
        }
        for (l, s) in logits.iter_mut().zip(&seen) {
            if *s {
                *l = if *l > 0.0 {
                    *l / config.repetition_penalty
                } else {
                    *l * config.repetition_penalty
                };
            }
        }
    }
    if config.temperature == 0.0 {
        return logits
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i as u32)
            .expect("non-empty vocabulary");
    }
    for l in &mut logits {
        *l /= config.temperature;
    }
    let probs: Vec<f64> = log_softmax(&logits).into_iter().map(f64::exp).collect();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let mut kept = 0;
    let mut mass = 0.0;
    for &i in &order {
        mass += probs[i];
        kept += 1;
        if mass >= config.top_p {
            break;
        }
    }
    let nucleus = &order[..kept];
    let mut u = rng.gen::<f64>() * mass;
    for &i in nucleus {
        u -= probs[i];
        if u < 0.0 {
            return i as u32;
        }
    }
    *nucleus.last().expect("nucleus is non-empty") as u32
}

/// Runs a [`TokenModel`] in-process.
pub struct LocalEngine<M> {
    model_id: String,
    model: M,
    context_limit: usize,
}

impl<M: TokenModel> LocalEngine<M> {
    pub fn new(model_id: impl Into<String>, model: M, context_limit: usize) -> Self {
        Self {
            model_id: model_id.into(),
            model,
            context_limit,
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

impl<M: TokenModel> LanguageBackend for LocalEngine<M> {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn kind(&self) -> BackendKind {
        BackendKind::LocalEngine
    }

    fn context_limit(&self) -> usize {
        self.context_limit
    }

    /// Teacher-forced scoring of the joint tokenization; completion tokens
    /// are those past the prompt's own token count.
    fn score(&self, prompt: &str, completion: &str) -> Result<RawScore, ScoringError> {
        if completion.is_empty() {
            return Err(ScoringError::EmptyCompletion);
        }
        let prompt_len = self.model.encode(prompt).len();
        let mut joint_text = String::with_capacity(prompt.len() + completion.len());
        joint_text.push_str(prompt);
        joint_text.push_str(completion);
        let joint = self.model.encode(&joint_text);
        if joint.len() > self.context_limit {
            return Err(ScoringError::ContextOverflow {
                tokens: joint.len(),
                limit: self.context_limit,
            });
        }
        if joint.len() <= prompt_len {
            return Err(ScoringError::EmptyCompletion);
        }
        let mut total = 0.0;
        for pos in prompt_len..joint.len() {
            let lp = log_softmax(&self.model.next_logits(&joint[..pos]));
            total += lp[joint[pos] as usize];
        }
        Ok(RawScore {
            logprob_sum: total,
            token_count: joint.len() - prompt_len,
        })
    }

    fn generate(
        &self,
        prompt: &str,
        config: &GenerationConfig,
    ) -> Result<Vec<RawGeneration>, ScoringError> {
        let prompt_tokens = self.model.encode(prompt);
        if prompt_tokens.len() >= self.context_limit {
            return Err(ScoringError::ContextOverflow {
                tokens: prompt_tokens.len(),
                limit: self.context_limit,
            });
        }
        (0..config.samples_per_prompt)
            .map(|i| {
                let mut rng = sampling_rng(config.seed, prompt, i);
                let mut context = prompt_tokens.clone();
                let mut finish = FinishReason::Length;
                for _ in 0..config.max_new_tokens {
                    if context.len() >= self.context_limit {
                        break;
                    }
                    let logits = self.model.next_logits(&context);
                    let tok = sample_token(&logits, &context, config, &mut rng);
                    if Some(tok) == self.model.eos() {
                        finish = FinishReason::Stop;
                        break;
                    }
                    context.push(tok);
                }
                Ok(RawGeneration {
                    text: self.model.decode(&context[prompt_tokens.len()..]),
                    finish_reason: finish,
                })
            })
            .collect()
    }
}
