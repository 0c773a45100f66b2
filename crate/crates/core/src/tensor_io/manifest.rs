use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::feature_map::{Dtype, FeatureMap, FeatureMeta};
use super::npy::{read_header, read_tensor};
use super::write_atomic;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    total_timesteps: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    allow_ragged: bool,
    entries: Vec<EntryFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    path: String,
    image_id: String,
    timestep: u32,
    #[serde(default)]
    group: String,
    #[serde(default)]
    label: Option<i64>,
    #[serde(default)]
    accuracy: Option<f64>,
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Path as written in the manifest.
    pub path: String,
    /// `path` resolved against the manifest's directory.
    pub resolved: PathBuf,
    pub meta: FeatureMeta,
    pub shape: (usize, usize, usize),
    pub label: Option<i64>,
    pub accuracy: Option<f64>,
}

/// Index binding tensor files to image ids, timesteps and optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub total_timesteps: u32,
    pub allow_ragged: bool,
    pub entries: Vec<ManifestEntry>,
}

/// Load and validate a manifest. Every referenced file must exist and carry
/// a valid tensor header; shapes must agree within a timestep unless
/// `allow_ragged` is set.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    DatasetManifest::from_json(&text, base)
}

impl DatasetManifest {
    /// Parse manifest JSON, resolving relative entry paths against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let file: ManifestFile =
            serde_json::from_str(text).map_err(|e| Error::ManifestSchemaError(e.to_string()))?;
        if file.total_timesteps == 0 {
            return Err(Error::ManifestSchemaError("total_timesteps must be >= 1".into()));
        }
        let mut first_shape: BTreeMap<u32, (usize, usize, usize)> = BTreeMap::new();
        let mut entries = Vec::with_capacity(file.entries.len());
        for (i, e) in file.entries.into_iter().enumerate() {
            if e.timestep == 0 || e.timestep > file.total_timesteps {
                return Err(Error::ManifestSchemaError(format!(
                    "entry {i} ({}): timestep {} outside [1, {}]",
                    e.path, e.timestep, file.total_timesteps
                )));
            }
            if let Some(a) = e.accuracy {
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::ManifestSchemaError(format!(
                        "entry {i} ({}): accuracy {a} outside [0, 1]",
                        e.path
                    )));
                }
            }
            let resolved = base.join(&e.path);
            if !resolved.is_file() {
                return Err(Error::MissingFile(resolved));
            }
            let header = read_header(&resolved)?;
            let shape = header.feature_shape()?;
            let expected = *first_shape.entry(e.timestep).or_insert(shape);
            if !file.allow_ragged && expected != shape {
                return Err(Error::MetaMismatch(format!(
                    "entry {i} ({}): shape {shape:?} differs from {expected:?} at timestep {}",
                    e.path, e.timestep
                )));
            }
            entries.push(ManifestEntry {
                path: e.path,
                resolved,
                meta: FeatureMeta {
                    image_id: e.image_id,
                    timestep: e.timestep,
                    group: e.group,
                    dtype: header.dtype,
                },
                shape,
                label: e.label,
                accuracy: e.accuracy,
            });
        }
        Ok(DatasetManifest {
            total_timesteps: file.total_timesteps,
            allow_ragged: file.allow_ragged,
            entries,
        })
    }

    /// Distinct timesteps, ascending.
    pub fn timesteps(&self) -> Vec<u32> {
        let mut ts: Vec<u32> = self.entries.iter().map(|e| e.meta.timestep).collect();
        ts.sort_unstable();
        ts.dedup();
        ts
    }

    /// Entries at timestep `t`, in manifest order.
    pub fn entries_at(&self, t: u32) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.meta.timestep == t)
    }

    /// Stream the feature maps at timestep `t` in manifest order.
    pub fn iterate(&self, t: u32) -> impl Iterator<Item = Result<FeatureMap>> + '_ {
        self.entries_at(t).map(load_entry)
    }

    /// Serialize to the manifest JSON schema. Entry paths are written as
    /// given, not resolved.
    pub fn to_json(&self) -> String {
        let file = ManifestFile {
            total_timesteps: self.total_timesteps,
            allow_ragged: self.allow_ragged,
            entries: self
                .entries
                .iter()
                .map(|e| EntryFile {
                    path: e.path.clone(),
                    image_id: e.meta.image_id.clone(),
                    timestep: e.meta.timestep,
                    group: e.meta.group.clone(),
                    label: e.label,
                    accuracy: e.accuracy,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json().as_bytes())
    }
}

/// Load the tensor behind `entry`, checking it against the header seen at
/// manifest load time and stamping the entry's metadata onto it.
pub fn load_entry(entry: &ManifestEntry) -> Result<FeatureMap> {
    let map = read_tensor(&entry.resolved)?;
    if map.shape() != entry.shape || map.meta.dtype != entry.meta.dtype {
        return Err(Error::MetaMismatch(format!(
            "{}: file changed since the manifest was loaded",
            entry.resolved.display()
        )));
    }
    Ok(map.with_meta(entry.meta.clone()))
}

impl ManifestEntry {
    /// Entry for a file that is about to be written; used when emitting
    /// manifests.
    pub fn planned(
        path: String,
        resolved: PathBuf,
        meta: FeatureMeta,
        shape: (usize, usize, usize),
    ) -> Self {
        ManifestEntry {
            path,
            resolved,
            meta,
            shape,
            label: None,
            accuracy: None,
        }
    }

    pub fn dtype(&self) -> Dtype {
        self.meta.dtype
    }
}
