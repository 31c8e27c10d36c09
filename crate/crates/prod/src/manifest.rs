//! JSONL dataset manifests.
//!
//! One JSON object per line, tagged by `status`: `"ok"` lines describe a
//! chip, `"error"` lines a job that failed. Chip paths are relative to the
//! manifest's directory and `/`-separated; checksums are SHA-256 of the raw
//! chip grid only.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Component, Path, PathBuf};

use sarsim_core::imaging::SensorModel;
use serde::{Deserialize, Serialize};

use crate::config::Paradigm;
use crate::{checksum, ProdError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipRecord {
    pub label: String,
    pub azimuth_deg: f64,
    pub depression_deg: f64,
    pub paradigm: Paradigm,
    pub variant: u32,
    pub seeds: BTreeMap<String, u64>,
    pub sensor: SensorModel,
    pub rows: usize,
    pub cols: usize,
    pub path: String,
    pub checksum: String,
}

impl ChipRecord {
    /// Sidecar path, relative like `path`.
    pub fn sidecar(&self) -> String {
        match self.path.strip_suffix(".f32") {
            Some(stem) => format!("{stem}.json"),
            None => format!("{}.json", self.path),
        }
    }

    /// Whether the chip under `root` exists and matches the checksum.
    pub fn verify(&self, root: &Path) -> bool {
        root.join(self.sidecar()).is_file()
            && fs::read(root.join(&self.path)).is_ok_and(|bytes| self.verify_bytes(&bytes))
    }

    pub fn verify_bytes(&self, bytes: &[u8]) -> bool {
        bytes.len() == 4 * self.rows * self.cols && checksum(bytes) == self.checksum
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub label: String,
    pub azimuth_deg: f64,
    pub depression_deg: f64,
    pub paradigm: Paradigm,
    pub variant: u32,
    pub path: String,
    pub error: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum Line {
    Ok(ChipRecord),
    Error(ErrorRecord),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub records: Vec<ChipRecord>,
    pub errors: Vec<ErrorRecord>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn paradigms(&self) -> BTreeSet<Paradigm> {
        self.records.iter().map(|r| r.paradigm).collect()
    }

    pub(crate) fn record_line(record: &ChipRecord) -> String {
        serde_json::to_string(&Line::Ok(record.clone())).expect("record serializes")
    }

    pub(crate) fn error_line(record: &ErrorRecord) -> String {
        serde_json::to_string(&Line::Error(record.clone())).expect("record serializes")
    }

    /// Chip records first, then errors, one per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&Self::record_line(r));
            out.push('\n');
        }
        for e in &self.errors {
            out.push_str(&Self::error_line(e));
            out.push('\n');
        }
        out
    }

    /// Parses JSONL; `origin` only labels error messages.
    pub fn from_jsonl(text: &str, origin: &Path) -> Result<Self> {
        let mut m = Manifest::default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(Line::Ok(r)) => m.records.push(r),
                Ok(Line::Error(e)) => m.errors.push(e),
                Err(e) => {
                    return Err(ProdError::Manifest {
                        path: origin.to_path_buf(),
                        reason: format!("line {}: {e}", n + 1),
                    })
                }
            }
        }
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ProdError::io(path, e))?;
        Self::from_jsonl(&text, path)
    }

    /// Writes through a temporary file and a rename, so readers never see a
    /// partial manifest.
    pub fn write_atomic(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| ProdError::io(dir, e))?;
        }
        let tmp = path.with_extension("jsonl.tmp");
        fs::write(&tmp, self.to_jsonl()).map_err(|e| ProdError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| ProdError::io(path, e))
    }

    /// Records whose chip is missing or fails its checksum under `root`.
    pub fn invalid_records(&self, root: &Path) -> Vec<&ChipRecord> {
        self.records.iter().filter(|r| !r.verify(root)).collect()
    }

    /// Same manifest with paths re-expressed relative to `to_dir` instead of
    /// `from_dir`.
    pub fn rebased(&self, from_dir: &Path, to_dir: &Path) -> Result<Manifest> {
        let from = absolute(from_dir)?;
        let to = absolute(to_dir)?;
        let rebase = |p: &str| relative(&to, &normalize(&from.join(p)));
        let mut out = self.clone();
        for r in &mut out.records {
            r.path = rebase(&r.path);
        }
        for e in &mut out.errors {
            e.path = rebase(&e.path);
        }
        Ok(out)
    }
}

/// Concatenation of manifests sharing one root. Fails on the first chip
/// path that appears twice.
pub fn combine_datasets(manifests: &[Manifest]) -> Result<Manifest> {
    let mut seen = BTreeSet::new();
    let mut out = Manifest::default();
    for m in manifests {
        for r in &m.records {
            if !seen.insert(r.path.as_str()) {
                return Err(ProdError::Collision(r.path.clone()));
            }
        }
        out.records.extend(m.records.iter().cloned());
        out.errors.extend(m.errors.iter().cloned());
    }
    Ok(out)
}

fn absolute(p: &Path) -> Result<PathBuf> {
    if p.is_absolute() {
        return Ok(normalize(p));
    }
    let cwd = std::env::current_dir().map_err(|e| ProdError::io(".", e))?;
    Ok(normalize(&cwd.join(p)))
}

/// Lexical normalization: drops `.` and folds `..` into its parent.
fn normalize(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

/// `/`-separated path of `target` seen from directory `base`; both absolute
/// and normalized.
fn relative(base: &Path, target: &Path) -> String {
    let b: Vec<_> = base.components().collect();
    let t: Vec<_> = target.components().collect();
    let common = b.iter().zip(&t).take_while(|(x, y)| x == y).count();
    let mut parts: Vec<String> = vec!["..".into(); b.len() - common];
    parts.extend(
        t[common..]
            .iter()
            .map(|c| c.as_os_str().to_string_lossy().into_owned()),
    );
    parts.join("/")
}
