use super::text::{find_ci, match_ci_at};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Gender-minority search terms used against the preference corpora.
pub const DEFAULT_SCAN_TERMS: [&str; 7] = [
    "transgender",
    "nonbinary",
    "non-binary",
    "gender queer",
    "genderqueer",
    "transman",
    "transwoman",
];

/// Characters of context kept on each side of the first match.
const EXCERPT_RADIUS: usize = 80;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnreadableRecord {
    pub dataset_name: String,
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMatch {
    pub dataset_name: String,
    pub record_id: String,
    pub matched_terms: BTreeSet<String>,
    pub excerpt: String,
}

/// Scan results for one dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetScan {
    pub dataset_name: String,
    pub records_scanned: usize,
    pub matches: Vec<CorpusMatch>,
    /// Number of records containing each term (every configured term is present).
    pub term_counts: BTreeMap<String, usize>,
    pub unreadable: Vec<UnreadableRecord>,
}

impl DatasetScan {
    pub fn match_count(&self) -> usize {
        self.matches.len()
    }
}

fn excerpt_around(text: &str, start: usize, end: usize) -> String {
    let from = text[..start]
        .char_indices()
        .rev()
        .nth(EXCERPT_RADIUS - 1)
        .map_or(0, |(i, _)| i);
    let to = text[end..]
        .char_indices()
        .nth(EXCERPT_RADIUS)
        .map_or(text.len(), |(i, _)| end + i);
    text[from..to].to_string()
}

/// Case-insensitive substring search of every record for every term.
///
/// Records arrive as `Result`s so a reader can report unparseable lines
/// without aborting the scan. Matches are ordered by record id.
pub fn scan_preference_corpus<I>(dataset_name: &str, records: I, terms: &[String]) -> DatasetScan
where
    I: IntoIterator<Item = Result<CorpusRecord, UnreadableRecord>>,
{
    let mut scan = DatasetScan {
        dataset_name: dataset_name.to_string(),
        term_counts: terms.iter().map(|t| (t.clone(), 0)).collect(),
        ..Default::default()
    };
    for rec in records {
        let rec = match rec {
            Ok(r) => r,
            Err(u) => {
                scan.unreadable.push(u);
                continue;
            }
        };
        scan.records_scanned += 1;
        let mut matched = BTreeSet::new();
        let mut first: Option<(usize, usize)> = None;
        for term in terms {
            if let Some((s, e)) = find_ci(&rec.text, term) {
                matched.insert(term.clone());
                if first.is_none_or(|(fs, _)| s < fs) {
                    first = Some((s, e));
                }
            }
        }
        if let Some((s, e)) = first {
            for t in &matched {
                *scan.term_counts.get_mut(t).expect("initialised") += 1;
            }
            debug_assert!(matched.iter().any(|t| match_ci_at(&rec.text, s, t).is_some()));
            scan.matches.push(CorpusMatch {
                dataset_name: dataset_name.to_string(),
                record_id: rec.id,
                excerpt: excerpt_around(&rec.text, s, e),
                matched_terms: matched,
            });
        }
    }
    scan.matches
        .sort_by(|a, b| a.record_id.cmp(&b.record_id));
    scan
}
