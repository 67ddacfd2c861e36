//! Run manifests: `<run_id>.manifest.json` next to a run's outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{read_file, write_file, CliError, CliResult, RunConfig};

pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub pdolab: String,
    pub pdolab_cli: String,
}

impl Versions {
    pub fn current() -> Self {
        Self { pdolab: pdolab::VERSION.to_string(), pdolab_cli: env!("CARGO_PKG_VERSION").to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub run_id: String,
    pub command: String,
    pub config: RunConfig,
    pub versions: Versions,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    /// Whether every verdict of the run passed; always true for runs without verdicts.
    pub pass: bool,
    /// Output files relative to the manifest's directory; the first is the JSON result.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = read_file(path)?;
        let m: Manifest = serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(CliError::Invalid(format!("{}: unsupported manifest schema {}", path.display(), m.schema)));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        write_file(path, format!("{text}\n").as_bytes())
    }
}
