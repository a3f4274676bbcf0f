use super::{jaccard, RegardDistribution};
use crate::corpus::DisclosurePrompt;
use crate::scoring::GenerationRecord;
use serde::{Deserialize, Serialize};

/// A generation paired with its prompt and echo score, before classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSample {
    pub sample_id: String,
    pub prompt: DisclosurePrompt,
    pub generation: GenerationRecord,
    pub jaccard: f64,
}

impl GeneratedSample {
    pub fn new(sample_id: String, prompt: DisclosurePrompt, generation: GenerationRecord) -> Self {
        let jaccard = jaccard(&prompt.rendered, &generation.text);
        Self {
            sample_id,
            prompt,
            generation,
            jaccard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegardSample {
    pub sample_id: String,
    pub prompt: DisclosurePrompt,
    pub generation: GenerationRecord,
    pub jaccard: f64,
    pub filtered: bool,
    /// Present iff the sample was not filtered.
    pub regard: Option<RegardDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toxicity: Option<f64>,
}

impl RegardSample {
    pub fn filtered(s: GeneratedSample) -> Self {
        Self {
            sample_id: s.sample_id,
            prompt: s.prompt,
            generation: s.generation,
            jaccard: s.jaccard,
            filtered: true,
            regard: None,
            toxicity: None,
        }
    }

    pub fn classified(s: GeneratedSample, regard: RegardDistribution, toxicity: Option<f64>) -> Self {
        Self {
            sample_id: s.sample_id,
            prompt: s.prompt,
            generation: s.generation,
            jaccard: s.jaccard,
            filtered: false,
            regard: Some(regard),
            toxicity,
        }
    }

    pub fn model_id(&self) -> &str {
        &self.generation.model_id
    }
}
