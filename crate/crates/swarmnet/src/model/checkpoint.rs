//! Versioned checkpoint files.
//!
//! Layout (little-endian): `"SWMC"` magic | `u32` version | `u32` config
//! length | resolved run config as JSON text | `u32` tensor count | per
//! tensor: `u32` name length, UTF-8 name, `u32` rank, `u32` dims, f32
//! payload. Tensors are stored in the canonical parameter order and
//! validated against the config's `model` section when loaded.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

use super::{SwarmNetConfig, SwarmNetParams};

const MAGIC: &[u8; 4] = b"SWMC";
const VERSION: u32 = 1;

/// Largest accepted name/config/tensor sizes; headers beyond this are
/// corrupt, not data this crate writes.
const MAX_BLOB: u64 = 1 << 28;

/// Write parameters with the resolved run config embedded verbatim.
///
/// `config_json` must be a JSON object whose `model` key deserializes to
/// the [`SwarmNetConfig`] the parameters were built from; this is checked
/// here so a checkpoint can never disagree with its own provenance.
pub fn save_checkpoint(
    path: &Path,
    config_json: &str,
    cfg: &SwarmNetConfig,
    params: &SwarmNetParams,
) -> Result<()> {
    let embedded = model_section(config_json)?;
    if &embedded != cfg {
        return Err(Error::Config(
            "checkpoint config blob disagrees with the model config".into(),
        ));
    }
    if !params.is_finite() {
        return Err(Error::PoisonedModel(
            "refusing to checkpoint non-finite parameters".into(),
        ));
    }

    let named = params.named();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    write_u32(&mut w, VERSION)?;
    write_u32(&mut w, config_json.len() as u32)?;
    w.write_all(config_json.as_bytes())?;
    write_u32(&mut w, named.len() as u32)?;
    for (name, tensor) in named {
        write_u32(&mut w, name.len() as u32)?;
        w.write_all(name.as_bytes())?;
        write_u32(&mut w, tensor.shape().len() as u32)?;
        for &d in tensor.shape() {
            write_u32(&mut w, d as u32)?;
        }
        let mut buf = Vec::with_capacity(tensor.len() * 4);
        for v in tensor.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// A loaded checkpoint: the verbatim config blob, its parsed model section,
/// and shape-validated parameters.
#[derive(Debug)]
pub struct Checkpoint {
    pub config_json: String,
    pub model_cfg: SwarmNetConfig,
    pub params: SwarmNetParams,
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "{} is not a checkpoint file (bad magic)",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version} (expected {VERSION})"
        )));
    }

    let cfg_len = read_u32(&mut r)? as usize;
    if cfg_len as u64 > MAX_BLOB {
        return Err(Error::Format("implausible config blob length".into()));
    }
    let mut cfg_bytes = vec![0u8; cfg_len];
    r.read_exact(&mut cfg_bytes)?;
    let config_json = String::from_utf8(cfg_bytes)
        .map_err(|_| Error::Format("config blob is not UTF-8".into()))?;
    let model_cfg = model_section(&config_json)?;

    let count = read_u32(&mut r)? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        if name_len as u64 > MAX_BLOB {
            return Err(Error::Format("implausible tensor name length".into()));
        }
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
        let rank = read_u32(&mut r)? as usize;
        if rank > 8 {
            return Err(Error::Format(format!("implausible tensor rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r)? as usize);
        }
        let len: usize = shape.iter().product();
        if len as u64 > MAX_BLOB {
            return Err(Error::Format(format!("implausible tensor shape {shape:?}")));
        }
        let mut buf = vec![0u8; len * 4];
        r.read_exact(&mut buf)?;
        let data = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        tensors.push((name, Tensor::new(shape, data)));
    }

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after the last tensor".into()));
    }

    let params = SwarmNetParams::from_named(&model_cfg, &tensors)?;
    Ok(Checkpoint {
        config_json,
        model_cfg,
        params,
    })
}

fn model_section(config_json: &str) -> Result<SwarmNetConfig> {
    let value: serde_json::Value = serde_json::from_str(config_json)
        .map_err(|e| Error::Config(format!("config blob is not valid JSON: {e}")))?;
    let section = value
        .get("model")
        .ok_or_else(|| Error::Config("config blob has no 'model' section".into()))?;
    serde_json::from_value(section.clone())
        .map_err(|e| Error::Config(format!("invalid model section: {e}")))
}

fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
