//! Dataset manifest: a TOML index of `.iq` recordings with their layout,
//! label and chirp rate, plus the radar configuration that produced them.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::iq::RawCaptureLayout;
use crate::label::Label;
use crate::sim::RadarConfig;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    /// Path of the `.iq` file, relative to the manifest's directory.
    pub file: String,
    pub label: Label,
    pub num_chirps: usize,
    pub samples_per_chirp: usize,
    pub num_channels: usize,
    pub selected_channel: usize,
    pub slow_time_rate: f64,
}

impl ManifestEntry {
    pub fn layout(&self) -> RawCaptureLayout {
        RawCaptureLayout {
            num_chirps: self.num_chirps,
            samples_per_chirp: self.samples_per_chirp,
            num_channels: self.num_channels,
            selected_channel: self.selected_channel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub master_seed: u64,
    pub radar: RadarConfig,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported manifest schema version {0}")]
    Version(u32),
    #[error("duplicate recording id `{0}`")]
    DuplicateId(String),
    #[error("recording `{id}`: file {path} does not exist")]
    MissingFile { id: String, path: String },
}

impl DatasetManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always representable as TOML")
    }

    /// Parses and validates a manifest. Relative file paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ManifestError> {
        let manifest: Self = toml::from_str(text)?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(ManifestError::Version(manifest.schema_version));
        }
        let mut ids = HashSet::new();
        for e in &manifest.entries {
            if !ids.insert(e.id.as_str()) {
                return Err(ManifestError::DuplicateId(e.id.clone()));
            }
            let path = base_dir.join(&e.file);
            if !path.is_file() {
                return Err(ManifestError::MissingFile {
                    id: e.id.clone(),
                    path: path.display().to_string(),
                });
            }
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(base_dir: &Path, entry: &ManifestEntry) -> PathBuf {
        base_dir.join(&entry.file)
    }
}
