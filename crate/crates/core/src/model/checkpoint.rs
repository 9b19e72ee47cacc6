//! Model checkpoints: one file holding config, vocabulary, and all
//! parameter tensors with shape headers and a format-version tag.
//!
//! Layout:
//! ```text
//! 8 bytes  magic "LTAGCKPT"
//! u32 LE   format version (1)
//! u64 LE   header length
//! bytes    JSON header: case_study, model_config, vocab (id order),
//!          tensors [{name, shape}], meta (sorted string map)
//! bytes    tensor payloads in header order, f64 little-endian
//! ```
//! f64 values are stored by bit pattern, so save/load round-trips are
//! bit-exact and repeated saves of the same state are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassifierParams, ModelConfig, ModelError};
use crate::corpus::{CaseStudy, Vocab};

const MAGIC: &[u8; 8] = b"LTAGCKPT";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    case_study: CaseStudy,
    model_config: ModelConfig,
    vocab: Vec<String>,
    tensors: Vec<TensorInfo>,
    meta: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

/// A loaded checkpoint.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub params: ClassifierParams,
    pub vocab: Vocab,
    pub case_study: CaseStudy,
    pub meta: BTreeMap<String, String>,
}

pub fn checkpoint_bytes(
    params: &ClassifierParams,
    vocab: &Vocab,
    case_study: CaseStudy,
    meta: &BTreeMap<String, String>,
) -> Vec<u8> {
    let header = Header {
        format_version: FORMAT_VERSION,
        case_study,
        model_config: params.config.clone(),
        vocab: vocab.tokens().to_vec(),
        tensors: params
            .tensor_shapes()
            .into_iter()
            .map(|(name, shape)| TensorInfo { name, shape })
            .collect(),
        meta: meta.clone(),
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");
    let payload_len: usize = params.tensors().iter().map(|(_, t)| t.len() * 8).sum();
    let mut out = Vec::with_capacity(8 + 4 + 8 + header_json.len() + payload_len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_json);
    for (_, tensor) in params.tensors() {
        for &x in tensor {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn save_checkpoint(
    path: &Path,
    params: &ClassifierParams,
    vocab: &Vocab,
    case_study: CaseStudy,
    meta: &BTreeMap<String, String>,
) -> Result<(), ModelError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, checkpoint_bytes(params, vocab, case_study, meta))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, ModelError> {
    let bytes = fs::read(path)?;
    checkpoint_from_bytes(&bytes)
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<Checkpoint, ModelError> {
    let bad = |msg: &str| ModelError::BadCheckpoint(msg.to_string());
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(bad("missing magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(ModelError::BadCheckpoint(format!(
            "unsupported format version {version}"
        )));
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    if bytes.len() < 20 + header_len {
        return Err(bad("truncated header"));
    }
    let header: Header = serde_json::from_slice(&bytes[20..20 + header_len])
        .map_err(|e| ModelError::BadCheckpoint(format!("bad header json: {e}")))?;
    header.model_config.validate()?;

    let mut params = ClassifierParams::zeros(&header.model_config);
    let expected_shapes = params.tensor_shapes();
    if expected_shapes.len() != header.tensors.len() {
        return Err(bad("tensor list does not match config"));
    }
    for ((name, shape), info) in expected_shapes.iter().zip(&header.tensors) {
        if *name != info.name || *shape != info.shape {
            return Err(ModelError::BadCheckpoint(format!(
                "tensor {name} has shape {:?}, expected {shape:?}",
                info.shape
            )));
        }
    }
    let mut offset = 20 + header_len;
    for (name, tensor) in params.tensors_mut() {
        let n = tensor.len() * 8;
        if bytes.len() < offset + n {
            return Err(ModelError::BadCheckpoint(format!(
                "truncated payload in tensor {name}"
            )));
        }
        for (i, x) in tensor.iter_mut().enumerate() {
            let start = offset + i * 8;
            *x = f64::from_le_bytes(bytes[start..start + 8].try_into().unwrap());
        }
        offset += n;
    }
    if offset != bytes.len() {
        return Err(bad("trailing bytes after payload"));
    }
    Ok(Checkpoint {
        params,
        vocab: Vocab::from_tokens(header.vocab),
        case_study: header.case_study,
        meta: header.meta,
    })
}
