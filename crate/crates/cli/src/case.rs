//! The case directory written by `segment` and read by `serve`.

use std::path::{Path, PathBuf};

use isoseg_core::volume::{read_volume, Volume};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CASE_FILE: &str = "case.json";
pub const CASE_SCHEMA: &str = "isoseg-case";
pub const CASE_VERSION: u32 = 1;
pub const SUGGESTIONS_FILE: &str = "suggestions.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFiles {
    pub t1: String,
    pub t2: String,
    pub mask: String,
    pub fused: String,
    pub agreement: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
    pub probabilities: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseManifest {
    pub schema: String,
    pub version: u32,
    pub volume_id: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub files: CaseFiles,
}

impl CaseManifest {
    pub fn parse(json: &[u8]) -> CliResult<Self> {
        let m: CaseManifest =
            serde_json::from_slice(json).map_err(|e| CliError::Parse(format!("case manifest: {e}")))?;
        if m.schema != CASE_SCHEMA || m.version != CASE_VERSION {
            return Err(CliError::Parse(format!(
                "case manifest: expected {CASE_SCHEMA} version {CASE_VERSION}, found {} version {}",
                m.schema, m.version
            )));
        }
        if m.k == 0 {
            return Err(CliError::Parse("case manifest: K must be positive".into()));
        }
        Ok(m)
    }
}

/// A loaded case: the images, the fused segmentation and its agreement.
#[derive(Clone, Debug)]
pub struct Case {
    pub dir: PathBuf,
    pub manifest: CaseManifest,
    pub t1: Volume<f32>,
    pub t2: Volume<f32>,
    pub mask: Volume<u8>,
    pub fused: Volume<u8>,
    pub agreement: Volume<f32>,
    pub truth: Option<Volume<u8>>,
}

impl Case {
    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(CASE_FILE);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let manifest = CaseManifest::parse(&bytes)?;
        let f = &manifest.files;
        let image = |name: &str| -> CliResult<Volume<f32>> { Ok(read_volume(dir.join(name))?.to_f32()) };
        let labels = |name: &str| -> CliResult<Volume<u8>> { Ok(read_volume(dir.join(name))?.to_labels()?) };
        let case = Case {
            t1: image(&f.t1)?,
            t2: image(&f.t2)?,
            mask: labels(&f.mask)?,
            fused: labels(&f.fused)?,
            agreement: image(&f.agreement)?,
            truth: f.truth.as_deref().map(labels).transpose()?,
            dir: dir.to_path_buf(),
            manifest,
        };
        let grids = [
            case.t2.same_grid(&case.t1),
            case.mask.same_grid(&case.t1),
            case.fused.same_grid(&case.t1),
            case.agreement.same_grid(&case.t1),
            case.truth.as_ref().is_none_or(|t| t.same_grid(&case.t1)),
        ];
        if grids.contains(&false) {
            return Err(CliError::Parse(format!("{}: case volumes do not share one grid", dir.display())));
        }
        Ok(case)
    }
}
