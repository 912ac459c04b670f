//! Dataset manifest: a JSON list of subjects with volume paths relative to
//! the manifest file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Subject;
use crate::error::{Error, Result};
use crate::volume::{read_volume, Volume};

pub const DATASET_SCHEMA: &str = "isoseg-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub id: String,
    pub t1: String,
    pub t2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    pub mask: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema: String,
    pub version: u32,
    pub subjects: Vec<SubjectEntry>,
}

impl DatasetManifest {
    pub fn new(subjects: Vec<SubjectEntry>) -> Self {
        Self {
            schema: DATASET_SCHEMA.into(),
            version: DATASET_VERSION,
            subjects,
        }
    }

    pub fn parse(json: &[u8]) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_slice(json)?;
        if m.schema != DATASET_SCHEMA {
            return Err(Error::malformed(
                "dataset manifest",
                format!("schema {:?} is not {DATASET_SCHEMA:?}", m.schema),
            ));
        }
        if m.version != DATASET_VERSION {
            return Err(Error::malformed(
                "dataset manifest",
                format!("version {} is not supported (expected {DATASET_VERSION})", m.version),
            ));
        }
        let mut seen = HashSet::new();
        for s in &m.subjects {
            if s.id.is_empty() {
                return Err(Error::malformed("dataset manifest", "empty subject id"));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::malformed("dataset manifest", format!("duplicate subject id {:?}", s.id)));
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn find(&self, id: &str) -> Option<&SubjectEntry> {
        self.subjects.iter().find(|s| s.id == id)
    }

    pub fn with_split(&self, split: Split) -> impl Iterator<Item = &SubjectEntry> {
        self.subjects.iter().filter(move |s| s.split == Some(split))
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Reads one subject's volumes; relative paths resolve against `base`.
pub fn load_subject(entry: &SubjectEntry, base: &Path) -> Result<Subject> {
    let t1 = read_volume(resolve(base, &entry.t1))?.to_f32();
    let t2 = read_volume(resolve(base, &entry.t2))?.to_f32();
    let mask: Volume<u8> = read_volume(resolve(base, &entry.mask))?.to_labels()?.map(|m| u8::from(m != 0));
    let labels = entry
        .labels
        .as_ref()
        .map(|p| read_volume(resolve(base, p))?.to_labels())
        .transpose()?;
    Subject::new(entry.id.clone(), t1, t2, labels, mask)
}

/// Loads every subject of the manifest at `path`, in manifest order.
pub fn load_subjects(path: impl AsRef<Path>) -> Result<Vec<Subject>> {
    let path = path.as_ref();
    let manifest = DatasetManifest::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    manifest.subjects.iter().map(|e| load_subject(e, base)).collect()
}
