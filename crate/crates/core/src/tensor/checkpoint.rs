//! Versioned binary checkpoints: a JSON header describing stage, model
//! metadata and the parameter index, followed by raw little-endian f64 data.
//! Optimizer state is not persisted; each training stage starts a fresh
//! Adam.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::params::ParamStore;
use super::tape::Value;

const MAGIC: &[u8; 4] = b"CSIM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    /// Pipeline stage that produced the checkpoint: `sl`, `finetune`, `rl`.
    pub stage: String,
    /// Caller-defined metadata (model dims, vocabularies, config echo).
    pub meta: serde_json::Value,
    pub params: Vec<ParamEntry>,
}

pub fn save_checkpoint(
    path: &Path,
    stage: &str,
    meta: serde_json::Value,
    params: &ParamStore,
) -> Result<()> {
    let header = CheckpointHeader {
        version: VERSION,
        stage: stage.to_string(),
        meta,
        params: (0..params.len())
            .map(|id| ParamEntry {
                name: params.name(id).to_string(),
                shape: params.value(id).shape.clone(),
            })
            .collect(),
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| Error::Checkpoint(format!("header serialization: {e}")))?;

    let mut file = std::fs::File::create(path)?;
    file.write_all(MAGIC)?;
    file.write_all(&VERSION.to_le_bytes())?;
    file.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    file.write_all(&header_bytes)?;
    for id in 0..params.len() {
        for x in &params.value(id).data {
            file.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointHeader, ParamStore)> {
    let mut file = std::fs::File::open(path)
        .map_err(|e| Error::Checkpoint(format!("cannot open {}: {e}", path.display())))?;
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)
        .map_err(|e| Error::Checkpoint(format!("truncated checkpoint: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic; not a checkpoint file".into()));
    }
    let mut word = [0u8; 4];
    file.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version}, expected {VERSION}"
        )));
    }
    let mut len_bytes = [0u8; 8];
    file.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)?;
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::Checkpoint(format!("malformed header: {e}")))?;

    let mut params = ParamStore::new();
    let mut rest = Vec::new();
    file.read_to_end(&mut rest)?;
    let mut offset = 0;
    for entry in &header.params {
        let n: usize = entry.shape.iter().product();
        let bytes = n * 8;
        if offset + bytes > rest.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint data truncated at parameter {:?}",
                entry.name
            )));
        }
        let data: Vec<f64> = rest[offset..offset + bytes]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        offset += bytes;
        params.define(
            &entry.name,
            Value {
                shape: entry.shape.clone(),
                data,
            },
        );
    }
    if offset != rest.len() {
        return Err(Error::Checkpoint("trailing bytes after parameter data".into()));
    }
    Ok((header, params))
}
