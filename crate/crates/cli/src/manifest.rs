use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub low_path: PathBuf,
    #[serde(default)]
    pub high_path: Option<PathBuf>,
}

/// Images to benchmark. Relative paths are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let err = |detail: String| CliError::Manifest {
            path: path.to_owned(),
            detail,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for entry in &mut manifest.entries {
            entry.low_path = base.join(&entry.low_path);
            if let Some(high) = entry.high_path.as_mut() {
                *high = base.join(&*high);
            }
        }
        manifest.validate().map_err(err)?;
        Ok(manifest)
    }

    /// Unique ids and existing files.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for entry in &self.entries {
            if !seen.insert(entry.id.as_str()) {
                return Err(format!("duplicate id {:?}", entry.id));
            }
            for p in std::iter::once(&entry.low_path).chain(entry.high_path.as_ref()) {
                if !p.is_file() {
                    return Err(format!("entry {:?}: {} does not exist", entry.id, p.display()));
                }
            }
        }
        Ok(())
    }
}
