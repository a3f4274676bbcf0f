use std::path::{Path, PathBuf};

/// Where each artifact lives under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    fn at(&self, parts: &[&str]) -> PathBuf {
        let mut p = self.root.clone();
        for part in parts {
            p.push(part);
        }
        p
    }

    pub fn pairs(&self) -> PathBuf {
        self.at(&["rewards", "pairs.jsonl"])
    }
    pub fn rejects(&self) -> PathBuf {
        self.at(&["rewards", "rejects.jsonl"])
    }
    pub fn score_cache(&self) -> PathBuf {
        self.at(&["rewards", "score-cache.jsonl"])
    }
    pub fn comparisons(&self, model: &str) -> PathBuf {
        self.at(&["rewards", "comparisons", &format!("{model}.jsonl")])
    }
    pub fn prompts(&self) -> PathBuf {
        self.at(&["generations", "prompts.jsonl"])
    }
    pub fn raw_generations(&self, model: &str) -> PathBuf {
        self.at(&["generations", "raw", &format!("{model}.jsonl")])
    }
    pub fn failures(&self, model: &str) -> PathBuf {
        self.at(&["generations", "failures", &format!("{model}.jsonl")])
    }
    pub fn samples(&self, model: &str) -> PathBuf {
        self.at(&["generations", "samples", &format!("{model}.jsonl")])
    }
    pub fn annotation_export(&self, base: &str, aligned: &str) -> PathBuf {
        self.at(&["annotations", &format!("{base}__{aligned}.csv")])
    }
    pub fn scan(&self, dataset: &str) -> PathBuf {
        self.at(&["scan", &format!("{dataset}.json")])
    }
    pub fn report_json(&self) -> PathBuf {
        self.at(&["report.json"])
    }
    pub fn manifest(&self) -> PathBuf {
        self.at(&["manifest.json"])
    }
    pub fn tables(&self) -> PathBuf {
        self.at(&["tables"])
    }
    pub fn plots(&self) -> PathBuf {
        self.at(&["plots"])
    }
}

pub(crate) fn ensure_parent(path: &Path) -> std::io::Result<()> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p)?;
    }
    Ok(())
}
