use super::CorpusError;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// A named group of subject terms, e.g. `tgnb = {lgbtq, queer, transgender,
/// nonbinary}`. Terms keep the casing they are written with; matching
/// against text is case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupLexicon {
    label: String,
    terms: Vec<String>,
}

impl GroupLexicon {
    pub fn new(
        label: impl Into<String>,
        terms: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self, CorpusError> {
        let label = label.into();
        let terms: Vec<String> = terms
            .into_iter()
            .map(Into::into)
            .map(|t: String| t.trim().to_string())
            .collect();
        let invalid = |reason: &str| CorpusError::InvalidLexicon {
            label: label.clone(),
            reason: reason.to_string(),
        };
        if label.trim().is_empty() {
            return Err(invalid("empty label"));
        }
        if terms.is_empty() {
            return Err(invalid("no terms"));
        }
        let mut seen = HashSet::new();
        for t in &terms {
            if t.is_empty() {
                return Err(invalid("empty term"));
            }
            if !seen.insert(t.to_lowercase()) {
                return Err(invalid(&format!("duplicate term {t:?}")));
            }
        }
        Ok(Self { label, terms })
    }

    /// Binary gender subjects used for the reward audit.
    pub fn default_binary() -> Self {
        Self::new("binary", ["cis", "cisgender"]).expect("static lexicon")
    }

    /// TGNB subjects used for the reward audit.
    pub fn default_tgnb() -> Self {
        Self::new("tgnb", ["lgbtq", "queer", "transgender", "nonbinary"]).expect("static lexicon")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Case-insensitive membership test.
    pub fn contains(&self, term: &str) -> bool {
        let t = term.trim().to_lowercase();
        self.terms.iter().any(|x| x.to_lowercase() == t)
    }
}

/// Checks that no term appears in more than one lexicon and labels are unique.
pub fn validate_lexicons(lexicons: &[GroupLexicon]) -> Result<(), CorpusError> {
    let mut labels = HashSet::new();
    let mut owners: std::collections::HashMap<String, &str> = Default::default();
    for lex in lexicons {
        if !labels.insert(lex.label.as_str()) {
            return Err(CorpusError::InvalidLexicon {
                label: lex.label.clone(),
                reason: "duplicate label".into(),
            });
        }
        for t in &lex.terms {
            if let Some(other) = owners.insert(t.to_lowercase(), &lex.label) {
                return Err(CorpusError::InvalidLexicon {
                    label: lex.label.clone(),
                    reason: format!("term {t:?} also belongs to {other:?}"),
                });
            }
        }
    }
    Ok(())
}
