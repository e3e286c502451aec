//! Binary episode dataset files.
//!
//! Layout (little-endian):
//! `"SWM1"` magic | `u32` version | `u32` episode count | per episode:
//! `u32` T, N, D, d_c | `T*N*D` f32 states (time outer, agent middle,
//! channel inner) | `d_c` f32 context | 1 byte model tag | `u64` seed.
//!
//! Unknown magic or version is rejected, as are trailing bytes and episodes
//! whose context length differs within one file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{ContextSpec, EpisodeTensor, SimModel, STATE_DIM};

const MAGIC: &[u8; 4] = b"SWM1";
const VERSION: u32 = 1;

/// Upper bound on a single episode's float count; anything larger is a
/// corrupt or hostile header, not data this crate ever writes.
const MAX_EPISODE_FLOATS: u64 = 1 << 28;

/// Write episodes to `path`, returning the file size in bytes.
pub fn write_dataset(path: &Path, episodes: &[EpisodeTensor]) -> Result<u64> {
    if episodes.is_empty() {
        return Err(Error::Config("refusing to write an empty dataset".into()));
    }
    let d_c = episodes[0].context_dim();
    if let Some(ep) = episodes.iter().find(|e| e.context_dim() != d_c) {
        return Err(Error::Config(format!(
            "context length must be constant across a dataset: {} vs {}",
            d_c,
            ep.context_dim()
        )));
    }

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    write_u32(&mut w, VERSION)?;
    write_u32(&mut w, episodes.len() as u32)?;
    for ep in episodes {
        write_u32(&mut w, ep.t() as u32)?;
        write_u32(&mut w, ep.n() as u32)?;
        write_u32(&mut w, ep.d() as u32)?;
        write_u32(&mut w, ep.context_dim() as u32)?;
        write_f32s(&mut w, ep.states())?;
        write_f32s(&mut w, ep.context.encoded())?;
        w.write_all(&[ep.model.tag()])?;
        w.write_all(&ep.seed.to_le_bytes())?;
    }
    w.flush()?;
    Ok(std::fs::metadata(path)?.len())
}

pub fn read_dataset(path: &Path) -> Result<Vec<EpisodeTensor>> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "{} is not a dataset file (bad magic)",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported dataset version {version} (expected {VERSION})"
        )));
    }

    let count = read_u32(&mut r)? as usize;
    let mut episodes = Vec::with_capacity(count);
    let mut d_c_seen: Option<usize> = None;
    for _ in 0..count {
        let t = read_u32(&mut r)? as usize;
        let n = read_u32(&mut r)? as usize;
        let d = read_u32(&mut r)? as usize;
        let d_c = read_u32(&mut r)? as usize;
        if d != STATE_DIM {
            return Err(Error::Format(format!(
                "episode state dimension {d} unsupported (expected {STATE_DIM})"
            )));
        }
        if (t as u64) * (n as u64) * (d as u64) > MAX_EPISODE_FLOATS {
            return Err(Error::Format(format!(
                "implausible episode header T={t} N={n} D={d}"
            )));
        }
        if let Some(prev) = d_c_seen {
            if prev != d_c {
                return Err(Error::Format(format!(
                    "context length changed mid-file: {prev} then {d_c}"
                )));
            }
        }
        d_c_seen = Some(d_c);

        let states = read_f32s(&mut r, t * n * d)?;
        let encoded = read_f32s(&mut r, d_c)?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let model = SimModel::from_tag(tag[0])?;
        let mut seed_bytes = [0u8; 8];
        r.read_exact(&mut seed_bytes)?;
        let seed = u64::from_le_bytes(seed_bytes);

        let context = ContextSpec::from_encoded(encoded, model.has_goal())?;
        episodes.push(EpisodeTensor::new(t, n, states, context, model, seed)?);
    }

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format(
            "trailing bytes after the last episode".into(),
        ));
    }
    Ok(episodes)
}

fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f32s(w: &mut impl Write, values: &[f32]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32s(r: &mut impl Read, count: usize) -> Result<Vec<f32>> {
    let mut buf = vec![0u8; count * 4];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}
