//! Binary checkpoint: magic, format version, then named little-endian f64
//! arrays. A JSON sidecar next to it carries the architecture and provenance.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{ArchSpec, Layout, ModelParams};

pub const MAGIC: &[u8; 8] = b"TCMGRCKP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("not a manager checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checkpoint does not match its architecture: {0}")]
    Mismatch(String),
    #[error("bad sidecar {path}: {message}")]
    Sidecar { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub arch: ArchSpec,
    pub seed: u64,
    pub iteration: u32,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn encode_params(params: &ModelParams) -> Vec<u8> {
    let layout = Layout::new(&params.arch);
    let mut out = Vec::with_capacity(16 + params.data.len() * 8 + layout.tensors.len() * 48);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(layout.tensors.len() as u32).to_le_bytes());
    for t in &layout.tensors {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &params.data[t.offset..t.offset + t.len()] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CheckpointError> {
        if self.0.len() < n {
            return Err(CheckpointError::Truncated);
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Decodes arrays written by [`encode_params`]; names and shapes must
/// match the layout of `arch` exactly.
pub fn decode_params(bytes: &[u8], arch: ArchSpec) -> Result<ModelParams, CheckpointError> {
    arch.validate()
        .map_err(|e| CheckpointError::Mismatch(e.to_string()))?;
    let mut r = Reader(bytes);
    if r.take(8)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version(version));
    }
    let layout = Layout::new(&arch);
    let count = r.u32()? as usize;
    if count != layout.tensors.len() {
        return Err(CheckpointError::Mismatch(format!(
            "{count} arrays, expected {}",
            layout.tensors.len()
        )));
    }
    let mut data = vec![0.0; layout.total];
    for t in &layout.tensors {
        let name_len = r.u32()? as usize;
        let name = String::from_utf8_lossy(r.take(name_len)?).into_owned();
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u64()? as usize);
        }
        if name != t.name || shape != t.shape {
            return Err(CheckpointError::Mismatch(format!(
                "found {name} {shape:?}, expected {} {:?}",
                t.name, t.shape
            )));
        }
        for v in &mut data[t.offset..t.offset + t.len()] {
            *v = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        }
    }
    if !r.0.is_empty() {
        return Err(CheckpointError::Mismatch("trailing bytes".into()));
    }
    Ok(ModelParams { arch, data })
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn save_checkpoint(
    path: &Path,
    params: &ModelParams,
    seed: u64,
    iteration: u32,
) -> Result<(), CheckpointError> {
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| CheckpointError::Io { path: p, source }
    };
    let meta = CheckpointMeta {
        format_version: FORMAT_VERSION,
        arch: params.arch,
        seed,
        iteration,
    };
    write_atomic(path, &encode_params(params)).map_err(io_err(path))?;
    let side = sidecar_path(path);
    let json = serde_json::to_vec_pretty(&meta).expect("meta serializes");
    write_atomic(&side, &json).map_err(io_err(&side))
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, CheckpointMeta), CheckpointError> {
    let side = sidecar_path(path);
    let text = fs::read(&side).map_err(|source| CheckpointError::Io {
        path: side.clone(),
        source,
    })?;
    let meta: CheckpointMeta =
        serde_json::from_slice(&text).map_err(|e| CheckpointError::Sidecar {
            path: side.clone(),
            message: e.to_string(),
        })?;
    if meta.format_version != FORMAT_VERSION {
        return Err(CheckpointError::Version(meta.format_version));
    }
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let params = decode_params(&bytes, meta.arch)?;
    Ok((params, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ArchSpec {
        ArchSpec {
            layers: 1,
            heads: 2,
            model_dim: 4,
            ff_dim: 6,
            ..ArchSpec::default()
        }
    }

    #[test]
    fn bytes_round_trip_exactly() {
        let mut p = ModelParams::init(small(), 3).unwrap();
        p.data[5] = f64::MIN_POSITIVE / 3.0;
        p.data[6] = -0.0;
        let back = decode_params(&encode_params(&p), p.arch).unwrap();
        assert!(p.data.iter().zip(&back.data).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let p = ModelParams::init(small(), 3).unwrap();
        let bytes = encode_params(&p);
        assert!(matches!(
            decode_params(&bytes[..bytes.len() - 1], p.arch),
            Err(CheckpointError::Truncated)
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_params(&bad, p.arch), Err(CheckpointError::BadMagic)));
        let other = ArchSpec {
            ff_dim: 8,
            ..small()
        };
        assert!(matches!(
            decode_params(&bytes, other),
            Err(CheckpointError::Mismatch(_))
        ));
    }
}
