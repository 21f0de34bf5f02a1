//! Checkpoints: parameters in a tensor container plus a JSON manifest.

use super::container::{decode, encode, DType, Entry};
use super::{sha256_hex, write_atomic};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::training::TrainConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const CHECKPOINT_FILE: &str = "model.bin";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamShape {
    pub name: String,
    pub shape: Vec<usize>,
}

/// Outcome of a best-of-k training job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// `accuracy` or `rmse`.
    pub metric: String,
    pub run_seeds: Vec<u64>,
    pub val_per_run: Vec<f64>,
    pub best_epoch_per_run: Vec<usize>,
    pub best_run: usize,
    pub val: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub config: BTreeMap<String, String>,
    pub config_hash: String,
    pub params: Vec<ParamShape>,
    pub checkpoint_sha256: String,
    /// Hashes of the dataset files the model was trained on.
    #[serde(default)]
    pub dataset: BTreeMap<String, String>,
    pub summary: RunSummary,
    /// Training log files next to the manifest.
    #[serde(default)]
    pub logs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub manifest: Manifest,
    pub config: TrainConfig,
    pub model: Model,
}

/// SHA-256 of the config's `key=value` lines.
pub fn config_hash(config: &TrainConfig) -> String {
    let text: String = config.to_pairs().iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    sha256_hex(text.as_bytes())
}

/// Writes `model.bin` and `manifest.json` into `dir`.
pub fn save_checkpoint(
    dir: &Path,
    config: &TrainConfig,
    model: &Model,
    summary: RunSummary,
    dataset: BTreeMap<String, String>,
    logs: Vec<String>,
) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let entries = model
        .store
        .iter()
        .map(|(_, p)| Entry::new(p.name.clone(), DType::F64, p.value.shape.clone(), p.value.data.clone()))
        .collect::<Result<Vec<_>>>()?;
    let bytes = encode(&entries);
    write_atomic(&dir.join(CHECKPOINT_FILE), &bytes)?;
    let manifest = Manifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.to_pairs().into_iter().collect(),
        config_hash: config_hash(config),
        params: entries.iter().map(|e| ParamShape { name: e.name.clone(), shape: e.shape.clone() }).collect(),
        checkpoint_sha256: sha256_hex(&bytes),
        dataset,
        summary,
        logs,
    };
    write_atomic(&dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

/// Loads a checkpoint, checking the parameter file hash, the config hash
/// and every parameter's name and shape.
pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::format(&mpath, e.to_string()))?;
    let config = TrainConfig::from_pairs(manifest.config.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    if config_hash(&config) != manifest.config_hash {
        return Err(Error::Integrity(format!("config in {} does not match its hash", mpath.display())));
    }
    let cpath = dir.join(CHECKPOINT_FILE);
    let bytes = std::fs::read(&cpath).map_err(|e| Error::io(&cpath, e))?;
    if sha256_hex(&bytes) != manifest.checkpoint_sha256 {
        return Err(Error::Integrity(format!("{} does not match the hash in its manifest", cpath.display())));
    }
    let entries = decode(&bytes, &cpath)?;
    let mut model = Model::new(config.model_config(), 0)?;
    if entries.len() != model.store.len() {
        return Err(Error::Integrity(format!("{} parameters in checkpoint, model has {}", entries.len(), model.store.len())));
    }
    for e in entries {
        let p = model
            .store
            .by_name_mut(&e.name)
            .ok_or_else(|| Error::Integrity(format!("checkpoint parameter `{}` not in model", e.name)))?;
        if p.value.shape != e.shape {
            return Err(Error::Integrity(format!("parameter `{}`: shape {:?} vs {:?}", e.name, e.shape, p.value.shape)));
        }
        p.value.data = e.data;
    }
    Ok(Checkpoint { manifest, config, model })
}
