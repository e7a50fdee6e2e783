//! Binary model checkpoints.
//!
//! Layout: `CNCK`, a version byte, a little-endian `u32` header length, the
//! UTF-8 JSON header, then every parameter tensor as little-endian `f64`s in
//! manifest order. Manifest offsets count bytes from the start of that
//! payload.

use std::path::Path;

use defectforge_core::nn::parse_layer_specs;
use defectforge_core::{ClassMap, Model, Tensor};
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 4] = b"CNCK";
pub const VERSION: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (expected {VERSION})")]
    VersionMismatch(u8),
    #[error("corrupt checkpoint: {0}")]
    CorruptPayload(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn corrupt(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::CorruptPayload(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    /// Epoch the parameters come from; 0 for an untrained model.
    pub epoch: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Model,
    pub classes: ClassMap,
    /// Per-channel mean subtracted from inputs before the forward pass.
    pub mean: Vec<f64>,
    pub meta: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u8,
    input_shape: Vec<usize>,
    class_labels: Vec<String>,
    layer_specs: Vec<String>,
    mean: Vec<f64>,
    tensor_manifest: Vec<ManifestEntry>,
    meta: TrainingMeta,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut offset = 0;
        let tensor_manifest = self
            .model
            .param_names()
            .into_iter()
            .zip(self.model.params())
            .map(|(name, t)| {
                let entry = ManifestEntry { name, shape: t.shape().to_vec(), offset };
                offset += t.len() * 8;
                entry
            })
            .collect();
        let header = Header {
            version: VERSION,
            input_shape: self.model.input_shape().to_vec(),
            class_labels: self.classes.labels().to_vec(),
            layer_specs: self.model.specs().iter().map(|s| s.to_string()).collect(),
            mean: self.mean.clone(),
            tensor_manifest,
            meta: self.meta,
        };
        let json = serde_json::to_vec(&header).expect("header is plain data");
        let mut out = Vec::with_capacity(9 + json.len() + offset);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for t in self.model.params() {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = *bytes.get(4).ok_or_else(|| corrupt("missing version byte"))?;
        if version != VERSION {
            return Err(CheckpointError::VersionMismatch(version));
        }
        let len_bytes: [u8; 4] = bytes.get(5..9).and_then(|b| b.try_into().ok()).ok_or_else(|| corrupt("missing header length"))?;
        let header_len = u32::from_le_bytes(len_bytes) as usize;
        let json = bytes.get(9..9 + header_len).ok_or_else(|| corrupt("header truncated"))?;
        let header: Header = serde_json::from_slice(json).map_err(|e| corrupt(format!("header: {e}")))?;
        if header.version != VERSION {
            return Err(CheckpointError::VersionMismatch(header.version));
        }
        let payload = &bytes[9 + header_len..];

        let specs = parse_layer_specs(&header.layer_specs.join("\n")).map_err(|e| corrupt(format!("layer specs: {e}")))?;
        let mut params = Vec::with_capacity(header.tensor_manifest.len());
        let mut expected_offset = 0;
        for entry in &header.tensor_manifest {
            if entry.offset != expected_offset {
                return Err(corrupt(format!("tensor {} at offset {}, expected {expected_offset}", entry.name, entry.offset)));
            }
            let n: usize = entry.shape.iter().product();
            let end = entry.offset + n * 8;
            let raw = payload
                .get(entry.offset..end)
                .ok_or_else(|| corrupt(format!("payload truncated in tensor {}", entry.name)))?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
            params.push(Tensor::from_vec(&entry.shape, data).map_err(|e| corrupt(format!("tensor {}: {e}", entry.name)))?);
            expected_offset = end;
        }
        if payload.len() != expected_offset {
            return Err(corrupt(format!("payload is {} bytes, manifest covers {expected_offset}", payload.len())));
        }

        let model = Model::with_params(&specs, &header.input_shape, params).map_err(|e| corrupt(e.to_string()))?;
        let names = model.param_names();
        if names.iter().ne(header.tensor_manifest.iter().map(|e| &e.name)) {
            return Err(corrupt("tensor names do not match the layer specs"));
        }
        let classes = ClassMap::new(header.class_labels.iter().map(String::as_str)).map_err(|e| corrupt(format!("class labels: {e}")))?;
        if classes.len() != model.num_classes() {
            return Err(corrupt(format!("{} class labels for a {}-way model", classes.len(), model.num_classes())));
        }
        let channels = header.input_shape.last().copied().unwrap_or(0);
        if header.mean.len() != channels || header.mean.iter().any(|m| !m.is_finite()) {
            return Err(corrupt(format!("mean must hold {channels} finite values")));
        }
        Ok(Checkpoint { model, classes, mean: header.mean, meta: header.meta })
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, ckpt.to_bytes()).map_err(|source| CheckpointError::Io { path: path.display().to_string(), source })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io { path: path.display().to_string(), source })?;
    Checkpoint::from_bytes(&bytes)
}
