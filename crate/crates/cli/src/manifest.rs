//! Dataset manifests: CSV rows of `path,label[,chunks]`.
//!
//! Paths are resolved relative to the manifest's directory, so a generated
//! corpus can be moved as a unit.

use std::path::{Path, PathBuf};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    /// Path exactly as written in the manifest; the join key for metrics.
    pub path: String,
    pub label: usize,
    pub chunks: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    base_dir: PathBuf,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .from_path(path)
            .map_err(|e| CliError::Input(format!("cannot read manifest {}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| CliError::Input(format!("bad manifest header: {e}")))?
            .clone();
        if headers.get(0) != Some("path") || headers.get(1) != Some("label") {
            return Err(CliError::Input(format!(
                "manifest {} must start with header path,label",
                path.display()
            )));
        }
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record =
                record.map_err(|e| CliError::Input(format!("manifest row {}: {e}", line + 2)))?;
            let file = record
                .get(0)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| CliError::Input(format!("manifest row {}: missing path", line + 2)))?;
            let label: usize = record
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::Input(format!("manifest row {}: bad label", line + 2)))?;
            let chunks = record
                .get(2)
                .filter(|s| !s.is_empty())
                .map(|s| s.to_string());
            rows.push(ManifestRow {
                path: file.to_string(),
                label,
                chunks,
            });
        }
        Ok(Manifest { base_dir, rows })
    }

    /// Absolute location of a path column value.
    pub fn resolve(&self, relative: &str) -> PathBuf {
        let p = Path::new(relative);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn has_chunks(&self) -> bool {
        self.rows.iter().any(|r| r.chunks.is_some())
    }
}

/// Writes a manifest; `rows` hold paths relative to the manifest location.
pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Input(format!("cannot write manifest {}: {e}", path.display())))?;
    let with_chunks = rows.iter().any(|r| r.chunks.is_some());
    let mut header = vec!["path", "label"];
    if with_chunks {
        header.push("chunks");
    }
    writer
        .write_record(&header)
        .map_err(|e| CliError::Input(e.to_string()))?;
    for row in rows {
        let label = row.label.to_string();
        let mut record = vec![row.path.as_str(), label.as_str()];
        let chunks = row.chunks.clone().unwrap_or_default();
        if with_chunks {
            record.push(chunks.as_str());
        }
        writer
            .write_record(&record)
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(())
}
