use super::RegardError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegardLabel {
    Negative,
    Neutral,
    Positive,
}

impl fmt::Display for RegardLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegardLabel::Negative => "negative",
            RegardLabel::Neutral => "neutral",
            RegardLabel::Positive => "positive",
        })
    }
}

/// What to do with probability mass on a fourth "other" class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtherPolicy {
    #[default]
    FoldIntoNeutral,
    Discard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegardDistribution {
    pub p_positive: f64,
    pub p_neutral: f64,
    pub p_negative: f64,
    pub label: RegardLabel,
}

impl RegardDistribution {
    /// Normalizes non-negative weights to probabilities. The label is the
    /// argmax, with ties going to negative, then neutral.
    pub fn new(positive: f64, neutral: f64, negative: f64) -> Result<Self, RegardError> {
        let parts = [positive, neutral, negative];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(RegardError::InvalidDistribution(format!("{parts:?}")));
        }
        let total: f64 = parts.iter().sum();
        if total <= 0.0 {
            return Err(RegardError::InvalidDistribution("all-zero scores".into()));
        }
        let (p_positive, p_neutral, p_negative) =
            (positive / total, neutral / total, negative / total);
        let label = if p_negative >= p_neutral && p_negative >= p_positive {
            RegardLabel::Negative
        } else if p_neutral >= p_positive {
            RegardLabel::Neutral
        } else {
            RegardLabel::Positive
        };
        Ok(Self {
            p_positive,
            p_neutral,
            p_negative,
            label,
        })
    }

    pub fn one_hot(label: RegardLabel) -> Self {
        let (pos, neu, neg) = match label {
            RegardLabel::Positive => (1.0, 0.0, 0.0),
            RegardLabel::Neutral => (0.0, 1.0, 0.0),
            RegardLabel::Negative => (0.0, 0.0, 1.0),
        };
        Self {
            p_positive: pos,
            p_neutral: neu,
            p_negative: neg,
            label,
        }
    }

    /// Reads a category-to-score map. Keys are matched case-insensitively;
    /// unrecognised keys are an error.
    pub fn from_scores(
        scores: &BTreeMap<String, f64>,
        other: OtherPolicy,
    ) -> Result<Self, RegardError> {
        let (mut pos, mut neu, mut neg) = (0.0, 0.0, 0.0);
        for (k, &v) in scores {
            match k.to_lowercase().as_str() {
                "positive" => pos += v,
                "neutral" => neu += v,
                "negative" => neg += v,
                "other" => {
                    if other == OtherPolicy::FoldIntoNeutral {
                        neu += v
                    }
                }
                _ => return Err(RegardError::InvalidDistribution(format!("unknown class {k:?}"))),
            }
        }
        Self::new(pos, neu, neg)
    }

    pub fn p(&self, label: RegardLabel) -> f64 {
        match label {
            RegardLabel::Positive => self.p_positive,
            RegardLabel::Neutral => self.p_neutral,
            RegardLabel::Negative => self.p_negative,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_tie_order() {
        assert_eq!(RegardDistribution::new(1.0, 1.0, 1.0).unwrap().label, RegardLabel::Negative);
        assert_eq!(RegardDistribution::new(1.0, 1.0, 0.0).unwrap().label, RegardLabel::Neutral);
        assert_eq!(RegardDistribution::new(2.0, 1.0, 1.0).unwrap().label, RegardLabel::Positive);
    }

    #[test]
    fn other_class() {
        let m: BTreeMap<String, f64> = [("Negative", 0.2), ("neutral", 0.2), ("positive", 0.1), ("other", 0.5)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let folded = RegardDistribution::from_scores(&m, OtherPolicy::FoldIntoNeutral).unwrap();
        assert!((folded.p_neutral - 0.7).abs() < 1e-12);
        assert_eq!(folded.label, RegardLabel::Neutral);
        let dropped = RegardDistribution::from_scores(&m, OtherPolicy::Discard).unwrap();
        assert!((dropped.p_negative - 0.4).abs() < 1e-12);
        assert_eq!(dropped.label, RegardLabel::Negative);
    }

    #[test]
    fn rejects_bad_scores() {
        assert!(RegardDistribution::new(0.0, 0.0, 0.0).is_err());
        assert!(RegardDistribution::new(-0.1, 0.5, 0.6).is_err());
        assert!(RegardDistribution::new(f64::NAN, 0.5, 0.6).is_err());
        let m: BTreeMap<String, f64> = [("angry".to_string(), 1.0)].into_iter().collect();
        assert!(RegardDistribution::from_scores(&m, OtherPolicy::default()).is_err());
    }
}
