//! Feature tensors on disk: the NPY v1.0 container and the dataset manifest.

mod feature_map;
mod manifest;
mod npy;

pub use feature_map::{reshape_tokens, Dtype, FeatureMap, FeatureMeta};
pub use manifest::{load_entry, load_manifest, DatasetManifest, ManifestEntry};
pub use npy::{decode_tensor, encode_tensor, read_header, read_tensor, write_tensor, NpyHeader};

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Write `bytes` to `path` through a temporary sibling file and an atomic
/// rename, so readers never observe a truncated file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
