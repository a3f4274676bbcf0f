use super::config::AuditConfig;
use super::emit::write_file;
use super::layout::Layout;
use super::model::ArtifactRef;
use super::ReportError;
use crate::digest::sha256_hex;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: Option<String>,
}

/// Run record kept beside the report. It carries the wall-clock timestamps
/// so the report itself stays reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub command: String,
    pub config_digest: String,
    pub started_at: String,
    pub finished_at: String,
    pub inputs: Vec<InputDigest>,
    pub artifacts: Vec<ArtifactRef>,
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    if !dir.exists() {
        return Ok(());
    }
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            walk(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

pub fn write_manifest(
    cfg: &AuditConfig,
    command: &str,
    started_at: &str,
    finished_at: &str,
) -> Result<PathBuf, ReportError> {
    let layout = Layout::new(cfg.output_path());
    let inputs = cfg
        .input_paths()
        .into_iter()
        .map(|p| InputDigest {
            sha256: std::fs::read(&p).ok().map(|b| sha256_hex(&b)),
            path: p.display().to_string(),
        })
        .collect();
    let mut files = Vec::new();
    walk(&layout.root, &mut files).map_err(|e| ReportError::Io(e.to_string()))?;
    let manifest_path = layout.manifest();
    let artifacts = files
        .iter()
        .filter(|p| **p != manifest_path)
        .map(|p| ArtifactRef::of(&layout.root, p).map_err(|e| ReportError::Io(e.to_string())))
        .collect::<Result<_, _>>()?;
    let m = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config_digest: cfg.digest(),
        started_at: started_at.to_string(),
        finished_at: finished_at.to_string(),
        inputs,
        artifacts,
    };
    let text = serde_json::to_string_pretty(&m).expect("serializable") + "\n";
    write_file(&manifest_path, text.as_bytes())?;
    Ok(manifest_path)
}
