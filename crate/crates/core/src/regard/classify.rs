use super::{OtherPolicy, RegardDistribution, RegardError, RegardLabel};
use crate::scoring::remote::{RemoteClient, WireRequest, WireTask};
use crate::scoring::ScoringError;
use serde::{Deserialize, Serialize};

pub trait RegardClassifier: Send + Sync {
    fn classifier_id(&self) -> &str;
    fn classify(&self, text: &str) -> Result<RegardDistribution, RegardError>;
    fn classify_batch(&self, texts: &[String]) -> Vec<Result<RegardDistribution, RegardError>> {
        texts.iter().map(|t| self.classify(t)).collect()
    }
}

pub trait ToxicityScorer: Send + Sync {
    fn scorer_id(&self) -> &str;
    /// Score in `[0, 1]`.
    fn score(&self, text: &str) -> Result<f64, RegardError>;
    fn score_batch(&self, texts: &[String]) -> Vec<Result<f64, RegardError>> {
        texts.iter().map(|t| self.score(t)).collect()
    }
}

pub fn classify_regard(
    classifier: &dyn RegardClassifier,
    text: &str,
) -> Result<RegardDistribution, RegardError> {
    if text.trim().is_empty() {
        return Err(RegardError::EmptyText);
    }
    classifier.classify(text)
}

pub fn score_toxicity(scorer: &dyn ToxicityScorer, text: &str) -> Result<f64, RegardError> {
    if text.trim().is_empty() {
        return Err(RegardError::EmptyText);
    }
    let s = scorer.score(text)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(RegardError::InvalidDistribution(format!("toxicity {s} outside [0, 1]")));
    }
    Ok(s)
}

/// `contains` is matched case-insensitively; the first matching rule wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegardRule {
    pub contains: String,
    /// `[positive, neutral, negative]` weights.
    pub weights: [f64; 3],
}

/// Scripted classifier driven by keyword rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordRegardClassifier {
    pub id: String,
    #[serde(default)]
    pub rules: Vec<RegardRule>,
    #[serde(default = "neutral_weights")]
    pub default_weights: [f64; 3],
}

fn neutral_weights() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

impl KeywordRegardClassifier {
    pub fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            rules: Vec::new(),
            default_weights: neutral_weights(),
        }
    }

    pub fn with_rule(mut self, contains: &str, weights: [f64; 3]) -> Self {
        self.rules.push(RegardRule {
            contains: contains.to_string(),
            weights,
        });
        self
    }

    pub fn with_label_rule(self, contains: &str, label: RegardLabel) -> Self {
        let d = RegardDistribution::one_hot(label);
        self.with_rule(contains, [d.p_positive, d.p_neutral, d.p_negative])
    }
}

impl RegardClassifier for KeywordRegardClassifier {
    fn classifier_id(&self) -> &str {
        &self.id
    }

    fn classify(&self, text: &str) -> Result<RegardDistribution, RegardError> {
        let lower = text.to_lowercase();
        let w = self
            .rules
            .iter()
            .find(|r| lower.contains(&r.contains.to_lowercase()))
            .map_or(self.default_weights, |r| r.weights);
        RegardDistribution::new(w[0], w[1], w[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToxicityRule {
    pub contains: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordToxicityScorer {
    pub id: String,
    #[serde(default)]
    pub rules: Vec<ToxicityRule>,
    #[serde(default)]
    pub default_score: f64,
}

impl KeywordToxicityScorer {
    pub fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            rules: Vec::new(),
            default_score: 0.0,
        }
    }

    pub fn with_rule(mut self, contains: &str, score: f64) -> Self {
        self.rules.push(ToxicityRule {
            contains: contains.to_string(),
            score,
        });
        self
    }
}

impl ToxicityScorer for KeywordToxicityScorer {
    fn scorer_id(&self) -> &str {
        &self.id
    }

    fn score(&self, text: &str) -> Result<f64, RegardError> {
        let lower = text.to_lowercase();
        Ok(self
            .rules
            .iter()
            .find(|r| lower.contains(&r.contains.to_lowercase()))
            .map_or(self.default_score, |r| r.score))
    }
}

fn unavailable(e: ScoringError) -> RegardError {
    RegardError::ClassifierUnavailable(e.to_string())
}

/// Regard classifier reached over the scoring module's line protocol.
pub struct RemoteRegardClassifier {
    pub id: String,
    pub client: RemoteClient,
    pub other: OtherPolicy,
}

impl RegardClassifier for RemoteRegardClassifier {
    fn classifier_id(&self) -> &str {
        &self.id
    }

    fn classify(&self, text: &str) -> Result<RegardDistribution, RegardError> {
        self.classify_batch(&[text.to_string()]).pop().expect("one result")
    }

    fn classify_batch(&self, texts: &[String]) -> Vec<Result<RegardDistribution, RegardError>> {
        let reqs: Vec<_> = texts
            .iter()
            .map(|t| WireRequest::classify(WireTask::Regard, &self.id, t))
            .collect();
        self.client
            .call(&reqs)
            .into_iter()
            .map(|r| {
                let r = r.map_err(unavailable)?;
                let scores = r.scores.ok_or_else(|| {
                    RegardError::InvalidDistribution("response has no scores".into())
                })?;
                RegardDistribution::from_scores(&scores, self.other)
            })
            .collect()
    }
}

pub struct RemoteToxicityScorer {
    pub id: String,
    pub client: RemoteClient,
}

impl ToxicityScorer for RemoteToxicityScorer {
    fn scorer_id(&self) -> &str {
        &self.id
    }

    fn score(&self, text: &str) -> Result<f64, RegardError> {
        self.score_batch(&[text.to_string()]).pop().expect("one result")
    }

    fn score_batch(&self, texts: &[String]) -> Vec<Result<f64, RegardError>> {
        let reqs: Vec<_> = texts
            .iter()
            .map(|t| WireRequest::classify(WireTask::Toxicity, &self.id, t))
            .collect();
        self.client
            .call(&reqs)
            .into_iter()
            .map(|r| {
                r.map_err(unavailable)?.toxicity.ok_or_else(|| {
                    RegardError::InvalidDistribution("response has no toxicity".into())
                })
            })
            .collect()
    }
}
