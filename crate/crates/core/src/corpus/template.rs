use super::text::find_term_occurrences;
use super::{CorpusError, GroupLexicon};
use crate::digest::short_digest;
use serde::{Deserialize, Serialize};

/// Slot marker standing in for the subject inside a template.
pub const SLOT: &str = "[]";

/// A paired-bias sentence split into a one-slot template and its subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedBiasInstance {
    pub raw_sentence: String,
    pub template: String,
    /// Subject exactly as it appears in `raw_sentence`.
    pub subject_term: String,
    pub group_label: String,
    pub source_id: String,
}

impl PairedBiasInstance {
    /// Stable identifier of the template text.
    pub fn template_id(&self) -> String {
        template_id(&self.template)
    }
}

pub(crate) fn template_id(template: &str) -> String {
    short_digest(template, 12)
}

/// Finds the single lexicon term in `sentence` and replaces it with [`SLOT`].
///
/// Matching is case-insensitive on word boundaries. Everything outside the
/// matched span is copied byte-for-byte, so filling the template with the
/// returned subject reproduces the sentence exactly.
pub fn extract_template(
    sentence: &str,
    lexicons: &[GroupLexicon],
) -> Result<PairedBiasInstance, CorpusError> {
    if sentence.contains(SLOT) {
        return Err(CorpusError::SlotCollision(sentence.to_string()));
    }
    let mut terms: Vec<&str> = Vec::new();
    let mut labels: Vec<&str> = Vec::new();
    for lex in lexicons {
        for t in lex.terms() {
            terms.push(t);
            labels.push(lex.label());
        }
    }
    let occ = find_term_occurrences(sentence, &terms);
    match occ.as_slice() {
        [] => Err(CorpusError::NoSubjectFound(sentence.to_string())),
        [one] => {
            let mut template = String::with_capacity(sentence.len());
            template.push_str(&sentence[..one.start]);
            template.push_str(SLOT);
            template.push_str(&sentence[one.end..]);
            Ok(PairedBiasInstance {
                raw_sentence: sentence.to_string(),
                template,
                subject_term: sentence[one.start..one.end].to_string(),
                group_label: labels[one.term_index].to_string(),
                source_id: short_digest(sentence, 16),
            })
        }
        many => Err(CorpusError::AmbiguousSubject {
            sentence: sentence.to_string(),
            found: many
                .iter()
                .map(|o| sentence[o.start..o.end].to_string())
                .collect(),
        }),
    }
}

/// Replaces the template's single slot with `subject`, casing untouched.
pub fn fill_template(template: &str, subject: &str) -> Result<String, CorpusError> {
    let slots = template.matches(SLOT).count();
    if slots != 1 {
        return Err(CorpusError::MalformedTemplate {
            template: template.to_string(),
            slots,
        });
    }
    Ok(template.replacen(SLOT, subject, 1))
}

/// True when the slot opens a sentence: only whitespace before it, or the
/// preceding non-space character ends a sentence.
pub(crate) fn slot_starts_sentence(template: &str) -> bool {
    let Some(pos) = template.find(SLOT) else {
        return false;
    };
    match template[..pos].trim_end().chars().next_back() {
        None => true,
        Some(c) => matches!(c, '.' | '!' | '?') && template[..pos].ends_with(char::is_whitespace),
    }
}

fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Subject as it should appear in `template`: capitalized when the slot
/// starts a sentence, otherwise as written in the lexicon.
pub(crate) fn display_subject(template: &str, term: &str) -> String {
    if slot_starts_sentence(template) {
        capitalize_first(term)
    } else {
        term.to_string()
    }
}

/// One row of a paired bias dataset after column mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedRow {
    pub source_id: String,
    pub sentence: String,
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReject {
    pub source_id: String,
    pub sentence: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub instances: Vec<PairedBiasInstance>,
    /// Rows whose subject is in a lexicon but could not be templatized.
    pub rejects: Vec<RowReject>,
    /// Rows whose subject annotation is in none of the lexicons.
    pub out_of_lexicon: usize,
}

/// Keeps rows whose annotated subject belongs to one of `lexicons` and
/// templatizes each. Per-row failures land in `rejects`; the batch never
/// aborts.
pub fn filter_paired_dataset(rows: &[PairedRow], lexicons: &[GroupLexicon]) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for row in rows {
        if !lexicons.iter().any(|l| l.contains(&row.subject)) {
            out.out_of_lexicon += 1;
            continue;
        }
        let result = extract_template(&row.sentence, lexicons).and_then(|mut inst| {
            if inst.subject_term.to_lowercase() != row.subject.trim().to_lowercase() {
                return Err(CorpusError::SubjectMismatch {
                    annotated: row.subject.clone(),
                    extracted: inst.subject_term,
                });
            }
            inst.source_id = row.source_id.clone();
            Ok(inst)
        });
        match result {
            Ok(inst) => out.instances.push(inst),
            Err(e) => out.rejects.push(RowReject {
                source_id: row.source_id.clone(),
                sentence: row.sentence.clone(),
                reason: e.to_string(),
            }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexicons() -> Vec<GroupLexicon> {
        vec![GroupLexicon::default_tgnb(), GroupLexicon::default_binary()]
    }

    #[test]
    fn extracts_sentence_initial_subject() {
        let inst =
            extract_template("Transgender people are unfit for professional work.", &lexicons())
                .unwrap();
        assert_eq!(inst.template, "[] people are unfit for professional work.");
        assert_eq!(inst.subject_term, "Transgender");
        assert_eq!(inst.group_label, "tgnb");
        assert_eq!(
            fill_template(&inst.template, &inst.subject_term).unwrap(),
            inst.raw_sentence
        );
    }

    #[test]
    fn no_subject() {
        assert!(matches!(
            extract_template("Cats are unfit for work.", &lexicons()),
            Err(CorpusError::NoSubjectFound(_))
        ));
    }

    #[test]
    fn ambiguous_subjects() {
        let e = extract_template("Queer and cis people argue.", &lexicons()).unwrap_err();
        assert!(matches!(e, CorpusError::AmbiguousSubject { ref found, .. } if found.len() == 2));
        let e = extract_template("Queer people are queer.", &lexicons()).unwrap_err();
        assert!(matches!(e, CorpusError::AmbiguousSubject { .. }));
    }

    #[test]
    fn slot_collision() {
        assert!(matches!(
            extract_template("[] queer", &lexicons()),
            Err(CorpusError::SlotCollision(_))
        ));
    }

    #[test]
    fn fill_examples() {
        assert_eq!(
            fill_template("[] people are unfit for professional work.", "Cisgender").unwrap(),
            "Cisgender people are unfit for professional work."
        );
        assert_eq!(
            fill_template("[] people are unfit for professional work.", "Transgender").unwrap(),
            "Transgender people are unfit for professional work."
        );
        assert!(matches!(
            fill_template("no slot here", "x"),
            Err(CorpusError::MalformedTemplate { slots: 0, .. })
        ));
        assert!(matches!(
            fill_template("[] and []", "x"),
            Err(CorpusError::MalformedTemplate { slots: 2, .. })
        ));
    }

    #[test]
    fn sentence_start_detection() {
        assert!(slot_starts_sentence("[] people"));
        assert!(slot_starts_sentence("  [] people"));
        assert!(slot_starts_sentence("Really. [] people"));
        assert!(!slot_starts_sentence("Most [] people"));
        assert!(!slot_starts_sentence("e.g.[] people"));
        assert_eq!(display_subject("[] people", "cisgender"), "Cisgender");
        assert_eq!(display_subject("Most [] people", "cisgender"), "cisgender");
    }

    #[test]
    fn filter_rows() {
        let rows = vec![
            PairedRow {
                source_id: "1".into(),
                sentence: "Transgender people are loud.".into(),
                subject: "transgender".into(),
            },
            PairedRow {
                source_id: "2".into(),
                sentence: "Asexual people are loud.".into(),
                subject: "asexual".into(),
            },
            PairedRow {
                source_id: "3".into(),
                sentence: "Queer people are queer.".into(),
                subject: "queer".into(),
            },
            PairedRow {
                source_id: "4".into(),
                sentence: "Cis people are loud.".into(),
                subject: "queer".into(),
            },
        ];
        let out = filter_paired_dataset(&rows, &lexicons());
        assert_eq!(out.instances.len(), 1);
        assert_eq!(out.instances[0].group_label, "tgnb");
        assert_eq!(out.instances[0].source_id, "1");
        assert_eq!(out.out_of_lexicon, 1);
        assert_eq!(out.rejects.len(), 2);
    }
}
