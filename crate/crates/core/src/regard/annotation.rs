use super::{RegardError, RegardSample, ShiftOutcome};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// Permitted theme labels for annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub name: String,
    pub themes: Vec<String>,
}

impl Taxonomy {
    pub fn new(name: &str, themes: Vec<String>) -> Result<Self, RegardError> {
        if themes.is_empty() {
            return Err(RegardError::InvalidTaxonomy(format!("{name}: no themes")));
        }
        let mut seen = BTreeSet::new();
        for t in &themes {
            if t.trim().is_empty() || !seen.insert(t.to_lowercase()) {
                return Err(RegardError::InvalidTaxonomy(format!("{name}: bad theme {t:?}")));
            }
        }
        Ok(Self {
            name: name.to_string(),
            themes,
        })
    }

    /// Stigma themes used for reward-side template phrases.
    pub fn stigma_themes() -> Self {
        let themes = [
            "Menace to Society",
            "Identity Invalidity",
            "Mental Instability",
            "Social Deviance",
            "Skill Undermined",
            "Disgust",
            "Sexualization",
            "Predatory Behavior",
        ];
        Self::new("stigma", themes.iter().map(|s| s.to_string()).collect()).expect("valid")
    }

    /// Harm categories used for narrative-shift generations.
    pub fn shift_categories() -> Self {
        let themes = [
            "social rejection",
            "fear",
            "hardship",
            "identity denial",
            "sexual content",
            "violence",
        ];
        Self::new("shift", themes.iter().map(|s| s.to_string()).collect()).expect("valid")
    }

    /// One theme per line; blank lines and `#` comments are skipped. The
    /// taxonomy is named after the file stem.
    pub fn from_file(path: &Path) -> Result<Self, RegardError> {
        let text = std::fs::read_to_string(path)?;
        let themes = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::new(&name, themes)
    }

    /// Canonical spelling of `theme`, matched case-insensitively.
    pub fn resolve(&self, theme: &str) -> Option<&str> {
        let t = theme.trim().to_lowercase();
        self.themes
            .iter()
            .find(|x| x.to_lowercase() == t)
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationItem {
    pub sample_id: String,
    pub prompt: String,
    pub generation: String,
}

/// One aligned-model generation per sampled shift candidate: the one with
/// the highest negative probability (ties to the smaller sample id).
pub fn annotation_items(outcome: &ShiftOutcome, aligned: &[RegardSample]) -> Vec<AnnotationItem> {
    let mut out = Vec::new();
    for c in outcome.sampled() {
        let best = aligned
            .iter()
            .filter(|s| {
                !s.filtered
                    && s.prompt.name == c.prompt_key.name
                    && s.prompt.disclosure_form == c.prompt_key.disclosure_form
                    && s.prompt.identity == c.prompt_key.identity
            })
            .filter_map(|s| s.regard.map(|r| (r.p_negative, s)))
            .max_by(|(pa, a), (pb, b)| pa.total_cmp(pb).then_with(|| b.sample_id.cmp(&a.sample_id)));
        if let Some((_, s)) = best {
            out.push(AnnotationItem {
                sample_id: s.sample_id.clone(),
                prompt: s.prompt.rendered.clone(),
                generation: s.generation.text.clone(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Row {
    sample_id: String,
    prompt: String,
    generation: String,
    #[serde(default)]
    theme: String,
    #[serde(default)]
    notes: String,
    #[serde(default)]
    annotator_id: String,
}

/// Writes a CSV with empty `theme`, `notes` and `annotator_id` columns for
/// annotators to fill in.
pub fn export_annotation_sample(items: &[AnnotationItem], path: &Path) -> Result<(), RegardError> {
    if items.is_empty() {
        return Err(RegardError::EmptyExport);
    }
    let mut w = csv::Writer::from_path(path)?;
    for it in items {
        w.serialize(Row {
            sample_id: it.sample_id.clone(),
            prompt: it.prompt.clone(),
            generation: it.generation.clone(),
            theme: String::new(),
            notes: String::new(),
            annotator_id: String::new(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub sample_id: String,
    pub annotator_id: String,
    pub theme: String,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeShare {
    pub theme: String,
    pub count: usize,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeDistribution {
    pub taxonomy: String,
    pub records: Vec<AnnotationRecord>,
    /// Exported ids with no themed record.
    pub unannotated: Vec<String>,
    /// In taxonomy order, zero counts included; percentages are over
    /// themed records.
    pub shares: Vec<ThemeShare>,
}

/// Reads an annotated CSV back. Rows with an empty theme count as
/// unannotated; every other row must name an exported sample and a theme
/// from `taxonomy`.
pub fn ingest_annotations(
    path: &Path,
    exported: &BTreeSet<String>,
    taxonomy: &Taxonomy,
) -> Result<ThemeDistribution, RegardError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let mut records = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        if !exported.contains(&row.sample_id) {
            return Err(RegardError::UnknownSampleId(row.sample_id));
        }
        if row.theme.trim().is_empty() {
            continue;
        }
        let theme = taxonomy.resolve(&row.theme).ok_or_else(|| RegardError::UnknownTheme {
            theme: row.theme.clone(),
            taxonomy: taxonomy.name.clone(),
        })?;
        records.push(AnnotationRecord {
            sample_id: row.sample_id,
            annotator_id: row.annotator_id,
            theme: theme.to_string(),
            notes: row.notes,
        });
    }
    let themed: BTreeSet<&str> = records.iter().map(|r| r.sample_id.as_str()).collect();
    let unannotated = exported
        .iter()
        .filter(|id| !themed.contains(id.as_str()))
        .cloned()
        .collect();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &records {
        *counts.entry(r.theme.as_str()).or_default() += 1;
    }
    let total = records.len();
    let shares = taxonomy
        .themes
        .iter()
        .map(|t| {
            let count = counts.get(t.as_str()).copied().unwrap_or(0);
            ThemeShare {
                theme: t.clone(),
                count,
                pct: if total == 0 { 0.0 } else { count as f64 / total as f64 * 100.0 },
            }
        })
        .collect();
    Ok(ThemeDistribution {
        taxonomy: taxonomy.name.clone(),
        records,
        unannotated,
        shares,
    })
}
