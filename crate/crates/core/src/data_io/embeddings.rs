use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::{seal, unseal, ByteReader, ByteWriter};

pub const MAGIC: &[u8; 4] = b"GSEM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn encode_embeddings(m: &Matrix) -> Result<Vec<u8>> {
    let n = u32::try_from(m.rows()).map_err(|_| Error::Format("too many rows".into()))?;
    let dim = u32::try_from(m.dim()).map_err(|_| Error::Format("dimension too large".into()))?;
    let mut w = ByteWriter::default();
    w.bytes(MAGIC);
    w.u32(VERSION);
    w.u32(n);
    w.u32(dim);
    for (i, &v) in m.as_flat().iter().enumerate() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::record(
                format!("row {}", i / m.dim().max(1)),
                format!("value {v} is not representable as a finite f32"),
            ));
        }
        w.f32(f);
    }
    Ok(seal(w.buf))
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < HEADER_LEN + 8 {
        return Err(Error::Format(format!(
            "embedding file truncated: {} bytes",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("not an embedding file (bad magic)".into()));
    }
    let mut r = ByteReader::new(bytes);
    r.take(4)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: VERSION,
        });
    }
    let n = r.len()?;
    let dim = r.len()?;
    let expected = n
        .checked_mul(dim)
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(HEADER_LEN + 8))
        .ok_or_else(|| Error::Format(format!("implausible header: {n} x {dim}")))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "embedding file holds {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let body = unseal(bytes)?;
    let mut r = ByteReader::new(&body[HEADER_LEN..]);
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n * dim {
        data.push(r.f32()? as f64);
    }
    if dim == 0 && n > 0 {
        return Err(Error::Format("embedding dimension is zero".into()));
    }
    Matrix::from_flat(dim, data).map(|m| if n == 0 { Matrix::zeros(0, dim) } else { m })
}

pub fn write_embeddings(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    fs::write(path, encode_embeddings(m)?)?;
    Ok(())
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<Matrix> {
    decode_embeddings(&fs::read(path)?)
}
