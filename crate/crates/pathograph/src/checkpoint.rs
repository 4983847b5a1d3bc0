//! Model checkpoints.
//!
//! Layout: 8-byte magic, `u32` format version, `u64` header length, a JSON
//! header (config, tensor shapes, seed), then every parameter as a
//! little-endian `f64` in the model's flat order. All integers are
//! little-endian.

use std::fs;
use std::path::Path;

use pathograph_core::gcn::{GcnConfig, GcnModel};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub const MAGIC: &[u8; 8] = b"PGGCNCKP";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub config: GcnConfig,
    pub input_dim: usize,
    pub classes: usize,
    /// (rows, cols) of every weight; each is followed by a `cols`-long bias.
    pub shapes: Vec<(usize, usize)>,
    pub parameter_count: usize,
    pub seed: u64,
}

pub fn encode(model: &GcnModel) -> Vec<u8> {
    let header = CheckpointHeader {
        config: model.config,
        input_dim: model.input_dim,
        classes: model.classes,
        shapes: (0..=model.config.layers).map(|l| model.weight_shape(l)).collect(),
        parameter_count: model.parameter_count(),
        seed: model.config.seed,
    };
    let json = serde_json::to_vec(&header).expect("plain json");
    let mut out = Vec::with_capacity(20 + json.len() + 8 * model.params().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

fn corrupt(msg: &str) -> AppError {
    AppError::Data(format!("checkpoint: {msg}"))
}

pub fn decode(bytes: &[u8]) -> AppResult<GcnModel> {
    let take = |at: usize, n: usize| bytes.get(at..at + n).ok_or_else(|| corrupt("truncated"));
    if take(0, 8)? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(take(8, 4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(corrupt(&format!("unsupported version {version}")));
    }
    let header_len = u64::from_le_bytes(take(12, 8)?.try_into().expect("8 bytes")) as usize;
    let header: CheckpointHeader =
        serde_json::from_slice(take(20, header_len)?).map_err(|e| corrupt(&e.to_string()))?;
    let payload = &bytes[20 + header_len..];
    if payload.len() != header.parameter_count * 8 {
        return Err(corrupt(&format!(
            "payload holds {} bytes, header promises {} parameters",
            payload.len(),
            header.parameter_count
        )));
    }
    let params = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let model = GcnModel::from_parts(header.config, header.input_dim, header.classes, params)?;
    let shapes: Vec<_> = (0..=model.config.layers).map(|l| model.weight_shape(l)).collect();
    if shapes != header.shapes {
        return Err(corrupt("tensor shapes disagree with the config"));
    }
    Ok(model)
}

pub fn save(path: &Path, model: &GcnModel) -> AppResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    fs::write(path, encode(model)).map_err(|e| AppError::io(path, e))
}

pub fn load(path: &Path) -> AppResult<GcnModel> {
    decode(&fs::read(path).map_err(|e| AppError::io(path, e))?)
}
