use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "model.json";
pub const PAYLOAD_FILE: &str = "model.bin";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the payload in elements.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub dtype: String,
    pub tensors: Vec<TensorEntry>,
    pub config: serde_json::Value,
}

pub fn manifest_for(store: &ParamStore, config: serde_json::Value) -> Manifest {
    let mut offset = 0;
    let tensors = store
        .names()
        .iter()
        .zip(store.tensors())
        .map(|(name, t)| {
            let e = TensorEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
                offset,
            };
            offset += t.data().len();
            e
        })
        .collect();
    Manifest {
        format_version: FORMAT_VERSION,
        dtype: "f64".into(),
        tensors,
        config,
    }
}

pub fn payload(store: &ParamStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(store.num_scalars() * 8);
    for t in store.tensors() {
        for x in t.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

/// Writes `model.json` and `model.bin` into `dir`, creating it if needed.
pub fn save_checkpoint(dir: &Path, store: &ParamStore, config: serde_json::Value) -> Result<(), CheckpointError> {
    fs::create_dir_all(dir)?;
    let manifest = manifest_for(store, config);
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    fs::write(dir.join(PAYLOAD_FILE), payload(store))?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<(ParamStore, serde_json::Value), CheckpointError> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(CheckpointError::Format(format!(
            "unsupported format version {}",
            manifest.format_version
        )));
    }
    if manifest.dtype != "f64" {
        return Err(CheckpointError::Format(format!("unsupported dtype {}", manifest.dtype)));
    }
    let bytes = fs::read(dir.join(PAYLOAD_FILE))?;
    let mut store = ParamStore::default();
    let mut expected_offset = 0;
    for e in &manifest.tensors {
        let [rows, cols] = e.shape[..] else {
            return Err(CheckpointError::Format(format!("{}: expected a 2-d shape", e.name)));
        };
        if e.offset != expected_offset {
            return Err(CheckpointError::Format(format!("{}: offset out of order", e.name)));
        }
        let n = rows * cols;
        let span = e.offset * 8..(e.offset + n) * 8;
        let raw = bytes
            .get(span)
            .ok_or_else(|| CheckpointError::Format(format!("{}: payload truncated", e.name)))?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        store.add(
            e.name.clone(),
            Tensor::from_vec(rows, cols, data).expect("length checked"),
        );
        expected_offset += n;
    }
    if expected_offset * 8 != bytes.len() {
        return Err(CheckpointError::Format("payload has trailing bytes".into()));
    }
    Ok((store, manifest.config))
}
