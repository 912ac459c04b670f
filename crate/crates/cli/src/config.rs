use std::path::Path;

use isoseg_core::ensemble::{DEFAULT_MIN_SIZE, DEFAULT_THRESHOLD};
use isoseg_core::metrics::HausdorffMode;
use isoseg_core::net::NetworkConfig;
use isoseg_core::pipeline::TrainConfig;
use isoseg_core::volume::PhantomConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub k: usize,
    pub train_per_model: usize,
    pub val_per_model: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            k: 10,
            train_per_model: 8,
            val_per_model: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuggestSection {
    pub threshold: f64,
    pub min_size: usize,
}

impl Default for SuggestSection {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            min_size: DEFAULT_MIN_SIZE,
        }
    }
}

/// Every tunable of a run. Values come from the defaults, then the config
/// file, then command-line flags. `seed` drives all randomness of a run and
/// replaces the nested `seed` fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub phantom: PhantomConfig,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub ensemble: EnsembleSection,
    pub suggest: SuggestSection,
    pub hausdorff: HausdorffMode,
}

impl RunConfig {
    /// Reads a `.toml` or `.json` file; other extensions are rejected.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let parsed = match ext {
            "toml" => Self::parse_toml(&text),
            "json" => Self::parse_json(&text),
            _ => {
                return Err(CliError::Usage(format!(
                    "{}: config files must end in .toml or .json",
                    path.display()
                )))
            }
        };
        parsed.map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn parse_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }

    pub fn parse_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_file(path: Option<&Path>) -> CliResult<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
