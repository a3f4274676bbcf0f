use super::template::{display_subject, fill_template, template_id};
use super::{CorpusError, GroupLexicon, PairedBiasInstance};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default simulated user turn.
pub const DEFAULT_PROMPT_FORMAT: &str = "Between {group1} and {group2}, what is more likely?";

/// A validated prompt format with exactly one `{group1}` and one `{group2}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PromptFormat(String);

impl PromptFormat {
    pub fn new(format: impl Into<String>) -> Result<Self, CorpusError> {
        let format = format.into();
        if format.matches("{group1}").count() != 1 || format.matches("{group2}").count() != 1 {
            return Err(CorpusError::MalformedPromptFormat(format));
        }
        Ok(Self(format))
    }

    pub fn render(&self, group1: &str, group2: &str) -> String {
        // Substitute through a sentinel so a subject containing "{group2}"
        // is never re-expanded.
        let mut out = String::with_capacity(self.0.len() + group1.len() + group2.len());
        let (head, tail) = self.0.split_once("{group1}").expect("validated");
        if let Some((a, b)) = head.split_once("{group2}") {
            out.push_str(a);
            out.push_str(group2);
            out.push_str(b);
            out.push_str(group1);
            out.push_str(tail);
        } else {
            let (a, b) = tail.split_once("{group2}").expect("validated");
            out.push_str(head);
            out.push_str(group1);
            out.push_str(a);
            out.push_str(group2);
            out.push_str(b);
        }
        out
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Default for PromptFormat {
    fn default() -> Self {
        Self(DEFAULT_PROMPT_FORMAT.to_string())
    }
}

impl TryFrom<String> for PromptFormat {
    type Error = CorpusError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<PromptFormat> for String {
    fn from(value: PromptFormat) -> Self {
        value.0
    }
}

/// Order of the two group mentions inside the simulated user turn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptOrder {
    /// The chosen completion's subject is named first.
    #[default]
    ChosenFirst,
    /// Subjects sorted case-insensitively.
    Alphabetical,
    /// Emit one pair per order, exposing position sensitivity.
    Both,
}

/// A paired-bias template recast as a preference triple `(x, y_c, y_r)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockPreferencePair {
    pub pair_id: String,
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub chosen_group: String,
    pub rejected_group: String,
    pub chosen_subject: String,
    pub rejected_subject: String,
    pub template_id: String,
    pub template: String,
}

/// Builds one pair per (template, chosen-group term, rejected-group term).
///
/// Templates are collected from every instance belonging to either lexicon
/// of `pairing` and deduplicated by text, so pairing `(A, B)` and `(B, A)`
/// yield the same completion pairs with roles swapped. Output is sorted by
/// template id, then subjects.
pub fn build_mock_preferences(
    instances: &[PairedBiasInstance],
    pairing: (&GroupLexicon, &GroupLexicon),
    prompt_format: &PromptFormat,
    order: PromptOrder,
) -> Result<Vec<MockPreferencePair>, CorpusError> {
    let (group_a, group_b) = pairing;
    if group_a.label() == group_b.label() {
        return Err(CorpusError::InvalidLexicon {
            label: group_a.label().to_string(),
            reason: "pairing needs two distinct groups".into(),
        });
    }
    let templates: BTreeMap<String, &str> = instances
        .iter()
        .filter(|i| i.group_label == group_a.label() || i.group_label == group_b.label())
        .map(|i| (template_id(&i.template), i.template.as_str()))
        .collect();

    let mut pairs = Vec::new();
    for (tid, template) in &templates {
        let mut rows = Vec::new();
        for a in group_a.terms() {
            for b in group_b.terms() {
                let sa = display_subject(template, a);
                let sb = display_subject(template, b);
                let chosen = fill_template(template, &sa)?;
                let rejected = fill_template(template, &sb)?;
                let orders: &[bool] = match order {
                    PromptOrder::ChosenFirst => &[false],
                    PromptOrder::Alphabetical => {
                        if sa.to_lowercase() <= sb.to_lowercase() {
                            &[false]
                        } else {
                            &[true]
                        }
                    }
                    PromptOrder::Both => &[false, true],
                };
                for &swapped in orders {
                    let prompt = if swapped {
                        prompt_format.render(&sb, &sa)
                    } else {
                        prompt_format.render(&sa, &sb)
                    };
                    let mut pair_id = format!("{tid}/{a}/{b}");
                    if order == PromptOrder::Both && swapped {
                        pair_id.push_str("/swapped");
                    }
                    rows.push(MockPreferencePair {
                        pair_id,
                        prompt,
                        chosen: chosen.clone(),
                        rejected: rejected.clone(),
                        chosen_group: group_a.label().to_string(),
                        rejected_group: group_b.label().to_string(),
                        chosen_subject: sa.clone(),
                        rejected_subject: sb.clone(),
                        template_id: tid.clone(),
                        template: template.to_string(),
                    });
                }
            }
        }
        rows.sort_by(|x, y| {
            (&x.chosen_subject, &x.rejected_subject, &x.pair_id).cmp(&(
                &y.chosen_subject,
                &y.rejected_subject,
                &y.pair_id,
            ))
        });
        pairs.extend(rows);
    }
    Ok(pairs)
}
