//! Binary tensor container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "DSMNTC01"
//! count   u64      number of entries
//! entry   repeated `count` times:
//!   name_len u32, name (UTF-8)
//!   dtype    u8     1 = f32, 2 = f64
//!   ndim     u32, dims u64 × ndim
//!   payload  prod(dims) values of dtype, little-endian
//! ```

use crate::error::{Error, Result};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"DSMNTC01";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    fn code(self) -> u8 {
        match self {
            DType::F32 => 1,
            DType::F64 => 2,
        }
    }

    fn width(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

/// One named tensor. Values are held as f64; f32 entries round on write.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Entry {
    pub fn new(name: impl Into<String>, dtype: DType, shape: Vec<usize>, data: Vec<f64>) -> Result<Entry> {
        let name = name.into();
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::Contract(format!("entry `{name}`: shape {shape:?} holds {} values", data.len())));
        }
        Ok(Entry { name, dtype, shape, data })
    }
}

pub fn encode(entries: &[Entry]) -> Vec<u8> {
    let mut w = ContainerWriter::new();
    entries.iter().for_each(|e| w.push(e));
    w.finish()
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::format(self.path, format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::format(self.path, format!("length {v} out of range")))
    }
}

/// Parses a container; `path` only labels errors.
pub fn decode(buf: &[u8], path: &Path) -> Result<Vec<Entry>> {
    let mut r = Reader { buf, pos: 0, path };
    if r.take(8).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::format(path, "not a tensor container (bad magic)"));
    }
    let count = r.len()?;
    let mut entries = Vec::new();
    for _ in 0..count {
        let n = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(n)?)
            .map_err(|_| Error::format(path, "entry name is not UTF-8"))?
            .to_string();
        let dtype = match r.u8()? {
            1 => DType::F32,
            2 => DType::F64,
            c => return Err(Error::format(path, format!("entry `{name}`: unknown dtype code {c}"))),
        };
        let ndim = r.u32()? as usize;
        let shape = (0..ndim).map(|_| r.len()).collect::<Result<Vec<_>>>()?;
        let count = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .and_then(|c| c.checked_mul(dtype.width()))
            .ok_or_else(|| Error::format(path, format!("entry `{name}`: shape {shape:?} overflows")))?;
        let bytes = r.take(count)?;
        let data = match dtype {
            DType::F32 => bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64).collect(),
            DType::F64 => bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect(),
        };
        entries.push(Entry { name, dtype, shape, data });
    }
    if r.pos != buf.len() {
        return Err(Error::format(path, format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(entries)
}

pub fn write_container(path: &Path, entries: &[Entry]) -> Result<()> {
    super::write_atomic(path, &encode(entries))
}

pub fn read_container(path: &Path) -> Result<Vec<Entry>> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&buf, path)
}

/// Incremental encoder; produces the same bytes as [`encode`].
#[derive(Debug, Default)]
pub struct ContainerWriter {
    body: Vec<u8>,
    count: u64,
}

impl ContainerWriter {
    pub fn new() -> ContainerWriter {
        ContainerWriter::default()
    }

    pub fn push(&mut self, e: &Entry) {
        let out = &mut self.body;
        out.extend_from_slice(&(e.name.len() as u32).to_le_bytes());
        out.extend_from_slice(e.name.as_bytes());
        out.push(e.dtype.code());
        out.extend_from_slice(&(e.shape.len() as u32).to_le_bytes());
        for &d in &e.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match e.dtype {
            DType::F32 => e.data.iter().for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
            DType::F64 => e.data.iter().for_each(|&v| out.extend_from_slice(&v.to_le_bytes())),
        }
        self.count += 1;
    }

    pub fn finish(self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.body.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.count.to_le_bytes());
        out.extend_from_slice(&self.body);
        out
    }
}
