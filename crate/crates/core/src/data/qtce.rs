//! QTCE: a little-endian container for per-token embedding matrices.
//!
//! ```text
//! magic    4 bytes  "QTCE"
//! version  u32      1
//! count    u64      number of records
//! per record:
//!   id_len    u32, id bytes (UTF-8)
//!   label_len u32, label bytes (UTF-8)
//!   T         u32
//!   D         u32
//!   T*D       f32, row-major
//! ```

use std::fs;
use std::path::Path;

use super::EmbeddingSequence;
use crate::error::{QtcError, Result};

pub const MAGIC: &[u8; 4] = b"QTCE";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

pub fn encode(seqs: &[EmbeddingSequence]) -> Result<Vec<u8>> {
    if let Some(first) = seqs.first() {
        if let Some(bad) = seqs.iter().find(|s| s.dim() != first.dim()) {
            return Err(QtcError::Data(format!(
                "record {} has dimension {} but the file uses {}",
                bad.id(),
                bad.dim(),
                first.dim()
            )));
        }
    }
    let payload: usize = seqs
        .iter()
        .map(|s| 16 + s.id().len() + s.label().len() + 4 * s.values().len())
        .sum();
    let mut buf = Vec::with_capacity(HEADER_LEN + payload);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(seqs.len() as u64).to_le_bytes());
    for s in seqs {
        put_str(&mut buf, s.id())?;
        put_str(&mut buf, s.label())?;
        buf.extend_from_slice(&to_u32(s.len(), "token count")?.to_le_bytes());
        buf.extend_from_slice(&to_u32(s.dim(), "dimension")?.to_le_bytes());
        for v in s.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(buf)
}

fn to_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| QtcError::Data(format!("{what} {n} does not fit in u32")))
}

fn put_str(buf: &mut Vec<u8>, s: &str) -> Result<()> {
    buf.extend_from_slice(&to_u32(s.len(), "string length")?.to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(QtcError::Format {
                offset: self.pos,
                message: format!(
                    "truncated file: need {n} bytes for {what}, {} remain",
                    self.bytes.len() - self.pos
                ),
            }),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let start = self.pos;
        let b = self.take(len, what)?;
        String::from_utf8(b.to_vec()).map_err(|_| QtcError::Format {
            offset: start,
            message: format!("{what} is not valid UTF-8"),
        })
    }
}

pub fn decode(bytes: &[u8]) -> Result<Vec<EmbeddingSequence>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(QtcError::Format {
            offset: 0,
            message: "bad magic, expected \"QTCE\"".into(),
        });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(QtcError::Format {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let count = r.u64("record count")?;
    let mut out = Vec::new();
    for _ in 0..count {
        let record_start = r.pos;
        let id = r.string("record id")?;
        let label = r.string("record label")?;
        let tokens = r.u32("token count")? as usize;
        let dim = r.u32("dimension")? as usize;
        let n = tokens.checked_mul(dim).ok_or_else(|| QtcError::Format {
            offset: record_start,
            message: "matrix size overflows".into(),
        })?;
        let raw = r.take(n.saturating_mul(4), "embedding matrix")?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let seq = EmbeddingSequence::new(id, label, dim, values).map_err(|e| QtcError::Format {
            offset: record_start,
            message: e.to_string(),
        })?;
        out.push(seq);
    }
    if r.pos != bytes.len() {
        return Err(QtcError::Format {
            offset: r.pos,
            message: format!("{} trailing bytes after last record", bytes.len() - r.pos),
        });
    }
    Ok(out)
}

pub fn write_embedding_file(path: impl AsRef<Path>, seqs: &[EmbeddingSequence]) -> Result<()> {
    fs::write(path, encode(seqs)?)?;
    Ok(())
}

pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<Vec<EmbeddingSequence>> {
    decode(&fs::read(path)?)
}
