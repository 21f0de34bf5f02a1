//! On-disk formats: tensor container, dataset directories, checkpoints.

mod checkpoint;
mod container;
mod dataset;

pub use checkpoint::{
    config_hash, load_checkpoint, save_checkpoint, Checkpoint, Manifest, ParamShape, RunSummary, CHECKPOINT_FILE, MANIFEST_FILE,
};
pub use container::{decode, encode, read_container, write_container, ContainerWriter, DType, Entry, MAGIC};
pub use dataset::{
    generate_dataset_dir, load_split, read_header, DatasetHeader, FloorPlanRecord, Record, ShapeRecord, Split, HEADER_FILE, SPLITS,
};

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}
