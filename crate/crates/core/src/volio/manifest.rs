use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_all, write_all};
use crate::error::{Error, Result};

/// SHA-256 digests (hex) of the four per-case outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checksums {
    pub source: String,
    pub target: String,
    pub lung_mask: String,
    pub nodule_mask: String,
}

/// One dataset case. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub case_id: String,
    pub source_path: String,
    pub target_path: String,
    pub lung_mask_path: String,
    pub nodule_mask_path: String,
    pub nodule_count: usize,
    /// How source and target intensities were scaled before writing.
    #[serde(default)]
    pub normalization: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksums: Option<Checksums>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ManifestRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn get(&self, case_id: &str) -> Option<&ManifestRecord> {
        self.records.iter().find(|r| r.case_id == case_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.case_id.as_str()) {
                return Err(Error::InvalidData(format!("duplicate case_id `{}`", r.case_id)));
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.records {
            // serializing plain strings and integers cannot fail
            out.extend(serde_json::to_vec(r).expect("manifest record serializes"));
            out.push(b'\n');
        }
        out
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let bytes = read_all(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let records = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect::<Result<Vec<ManifestRecord>>>()?;
    let m = DatasetManifest { records };
    m.check_unique()?;
    Ok(m)
}

/// Writes the manifest as JSON lines. Successful records must reference
/// files that exist relative to the manifest's directory.
pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    manifest.check_unique()?;
    let root = path.parent().unwrap_or_else(|| Path::new(""));
    for r in manifest.records.iter().filter(|r| r.is_ok()) {
        for p in [&r.source_path, &r.target_path, &r.lung_mask_path, &r.nodule_mask_path] {
            if !root.join(p).is_file() {
                return Err(Error::MissingFile(root.join(p)));
            }
        }
    }
    write_all(path, &manifest.to_jsonl())
}
