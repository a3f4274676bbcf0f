//! Readers for the plain data files an audit config points at.

use super::{
    CorpusRecord, FormKind, GroupLexicon, IdentityGroup, PairedRow, UnreadableRecord,
};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum DataFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: String, column: String },
    #[error(transparent)]
    Corpus(#[from] super::CorpusError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DataFileError + '_ {
    move |source| DataFileError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Non-empty, non-comment (`#`) lines, trimmed, with their 1-based numbers.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>, DataFileError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push((i + 1, t.to_string()));
    }
    Ok(out)
}

/// One entry per line.
pub fn read_list(path: &Path) -> Result<Vec<String>, DataFileError> {
    Ok(data_lines(path)?.into_iter().map(|(_, l)| l).collect())
}

/// Tab-separated `entry<TAB>tag` lines.
fn read_tagged<T>(path: &Path) -> Result<Vec<(String, T)>, DataFileError>
where
    T: std::str::FromStr<Err = String>,
{
    data_lines(path)?
        .into_iter()
        .map(|(n, l)| {
            let parse = |reason: String| DataFileError::Parse {
                path: path.display().to_string(),
                line: n,
                reason,
            };
            let (entry, tag) = l
                .rsplit_once('\t')
                .ok_or_else(|| parse("expected `entry<TAB>tag`".into()))?;
            Ok((entry.trim().to_string(), tag.parse::<T>().map_err(parse)?))
        })
        .collect()
}

pub fn read_identities(path: &Path) -> Result<Vec<(String, IdentityGroup)>, DataFileError> {
    read_tagged(path)
}

pub fn read_forms(path: &Path) -> Result<Vec<(String, FormKind)>, DataFileError> {
    read_tagged(path)
}

pub fn read_lexicon(label: &str, path: &Path) -> Result<GroupLexicon, DataFileError> {
    Ok(GroupLexicon::new(label, read_list(path)?)?)
}

/// Column mapping for a delimited paired dataset. Each `(sentence, subject)`
/// column pair yields one [`PairedRow`] per line, so datasets storing both
/// halves of a pair on one line map both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSpec {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub columns: Vec<ColumnPair>,
    #[serde(default)]
    pub id_column: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnPair {
    pub sentence: String,
    pub subject: String,
}

fn default_delimiter() -> char {
    ','
}

pub fn read_paired_table(path: &Path, spec: &TableSpec) -> Result<Vec<PairedRow>, DataFileError> {
    let csv_err = |source| DataFileError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter as u8)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DataFileError::MissingColumn {
                path: path.display().to_string(),
                column: name.to_string(),
            })
    };
    let pairs: Vec<(usize, usize)> = spec
        .columns
        .iter()
        .map(|c| Ok((col(&c.sentence)?, col(&c.subject)?)))
        .collect::<Result<_, DataFileError>>()?;
    let id_col = spec.id_column.as_deref().map(col).transpose()?;

    let mut rows = Vec::new();
    for (line_no, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let base_id = id_col
            .and_then(|c| rec.get(c).map(str::to_string))
            .unwrap_or_else(|| (line_no + 1).to_string());
        for (k, &(s, subj)) in pairs.iter().enumerate() {
            let source_id = if pairs.len() > 1 {
                format!("{base_id}:{k}")
            } else {
                base_id.clone()
            };
            rows.push(PairedRow {
                source_id,
                sentence: rec.get(s).unwrap_or_default().to_string(),
                subject: rec.get(subj).unwrap_or_default().to_string(),
            });
        }
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct RawRecord {
    id: serde_json::Value,
    text: String,
}

/// Streams `{"id": ..., "text": ...}` lines. Unparseable lines come back as
/// [`UnreadableRecord`]s instead of ending the stream.
pub fn read_corpus_jsonl(
    dataset_name: &str,
    path: &Path,
) -> Result<impl Iterator<Item = Result<CorpusRecord, UnreadableRecord>>, DataFileError> {
    let file = File::open(path).map_err(io_err(path))?;
    let name = dataset_name.to_string();
    Ok(BufReader::new(file)
        .split(b'\n')
        .enumerate()
        .filter_map(move |(i, line)| {
            let unreadable = |reason: String| UnreadableRecord {
                dataset_name: name.clone(),
                line: i + 1,
                reason,
            };
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(unreadable(e.to_string()))),
            };
            if line.iter().all(u8::is_ascii_whitespace) {
                return None;
            }
            Some(
                serde_json::from_slice::<RawRecord>(&line)
                    .map_err(|e| unreadable(e.to_string()))
                    .map(|r| CorpusRecord {
                        id: match r.id {
                            serde_json::Value::String(s) => s,
                            other => other.to_string(),
                        },
                        text: r.text,
                    }),
            )
        }))
}
