use super::LogProbRecord;
use crate::digest::text_digest;
use crate::jsonl;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub model_id: String,
    pub prompt_digest: String,
    pub completion_digest: String,
    pub params_digest: String,
}

impl CacheKey {
    pub fn new(model_id: &str, prompt: &str, completion: &str, params_digest: &str) -> Self {
        Self {
            model_id: model_id.to_string(),
            prompt_digest: text_digest(prompt),
            completion_digest: text_digest(completion),
            params_digest: params_digest.to_string(),
        }
    }

    fn of(record: &LogProbRecord) -> Self {
        Self::new(
            &record.model_id,
            &record.prompt,
            &record.completion,
            &record.params_digest,
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub entries: usize,
    pub hits: u64,
    pub misses: u64,
    pub corrupt_entries: usize,
}

/// Score cache with an optional append-only JSONL log.
///
/// Loading replays the log; unparseable lines (including a torn final line)
/// are skipped and counted. Appends from concurrent workers are serialised
/// by a mutex. A repeated key overwrites the in-memory entry, which is safe
/// because scoring is deterministic.
#[derive(Debug, Default)]
pub struct ScoreCache {
    entries: RwLock<HashMap<CacheKey, LogProbRecord>>,
    log: Option<(PathBuf, Mutex<File>)>,
    hits: AtomicU64,
    misses: AtomicU64,
    corrupt: usize,
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(path: &Path) -> io::Result<Self> {
        let read = jsonl::read_if_exists::<LogProbRecord>(path)?;
        for line in &read.corrupt_lines {
            tracing::warn!(path = %path.display(), line, "skipping corrupt cache entry");
        }
        let entries: HashMap<_, _> = read
            .records
            .into_iter()
            .map(|r| (CacheKey::of(&r), r))
            .collect();
        let file = jsonl::open_append(path)?;
        Ok(Self {
            entries: RwLock::new(entries),
            log: Some((path.to_path_buf(), Mutex::new(file))),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            corrupt: read.corrupt_lines.len(),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.log.as_ref().map(|(p, _)| p.as_path())
    }

    pub fn get(&self, key: &CacheKey) -> Option<LogProbRecord> {
        let hit = self.entries.read().expect("cache lock").get(key).cloned();
        let counter = if hit.is_some() {
            &self.hits
        } else {
            &self.misses
        };
        counter.fetch_add(1, Ordering::Relaxed);
        hit
    }

    pub fn put(&self, key: &CacheKey, record: &LogProbRecord) -> io::Result<()> {
        if let Some((_, file)) = &self.log {
            let mut f = file.lock().expect("cache log lock");
            jsonl::append(&mut f, record)?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert(key.clone(), record.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            entries: self.len(),
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            corrupt_entries: self.corrupt,
        }
    }
}
