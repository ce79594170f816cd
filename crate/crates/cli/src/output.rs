//! Output directory handling: atomic writes and the manifest written last.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{Context, Result};

use crate::manifest::{now, sha256_hex, OutputFile, RunManifest, RunSpec, MANIFEST_FILE};

/// Collects the files of one run and writes its manifest on `finish`.
pub struct OutputDir {
    dir: PathBuf,
    spec: RunSpec,
    hash: String,
    started_at: String,
    written: Mutex<Vec<OutputFile>>,
}

impl OutputDir {
    pub fn create(dir: &Path, spec: RunSpec) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            hash: spec.hash(),
            spec,
            started_at: now(),
            written: Mutex::new(Vec::new()),
        })
    }

    pub fn manifest_hash(&self) -> &str {
        &self.hash
    }

    /// Writes through a temporary file in the same directory, then renames.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.written.lock().unwrap().push(OutputFile {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn finish(self) -> Result<PathBuf> {
        let mut outputs = self.written.into_inner().unwrap();
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            manifest_hash: self.hash,
            spec: self.spec,
            outputs,
            started_at: self.started_at,
            finished_at: now(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write in {}", dir.display()))?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// CSV with a trailing `manifest` column holding the run hash on every row.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
    hash: String,
}

impl Table {
    pub fn new(header: &[&str], hash: &str) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header.iter().copied().chain(["manifest"]))?;
        Ok(Table {
            writer,
            hash: hash.to_string(),
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut record: Vec<String> = fields.into_iter().map(Into::into).collect();
        record.push(self.hash.clone());
        self.writer.write_record(&record)?;
        Ok(())
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        self.writer.into_inner().map_err(|e| anyhow::anyhow!(e.to_string()))
    }
}
