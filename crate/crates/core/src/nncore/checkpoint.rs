//! Binary checkpoint: magic `FWSP`, version, architecture digest, layout
//! table, then the parameter values as little-endian `f32`.

use std::io::{Read, Write};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{Layout, ParamKind, ParamVector, Real};
use crate::error::{ensure, Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FWSP";
pub const CHECKPOINT_VERSION: u16 = 1;

pub type Digest = [u8; 32];

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub digest: Digest,
    pub params: ParamVector<f32>,
}

pub fn write_checkpoint<T: Real, W: Write>(mut w: W, digest: &Digest, params: &ParamVector<T>) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_u16::<LittleEndian>(CHECKPOINT_VERSION)?;
    w.write_all(digest)?;
    let entries = params.layout().entries();
    w.write_u32::<LittleEndian>(entries.len() as u32)?;
    for e in entries {
        let name = e.name.as_bytes();
        ensure!(name.len() <= u16::MAX as usize, Format, "parameter name too long");
        w.write_u16::<LittleEndian>(name.len() as u16)?;
        w.write_all(name)?;
        w.write_u8(e.kind.code())?;
        w.write_u64::<LittleEndian>(e.len as u64)?;
    }
    w.write_u64::<LittleEndian>(params.len() as u64)?;
    for v in params.values() {
        w.write_f32::<LittleEndian>(v.to_f64() as f32)?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    ensure!(&magic == CHECKPOINT_MAGIC, Format, "not a checkpoint (magic {magic:?})");
    let version = r.read_u16::<LittleEndian>()?;
    ensure!(version == CHECKPOINT_VERSION, Format, "unsupported checkpoint version {version}");
    let mut digest = [0u8; 32];
    r.read_exact(&mut digest)?;
    let count = r.read_u32::<LittleEndian>()? as usize;
    let mut items = Vec::with_capacity(count);
    for _ in 0..count {
        let n = r.read_u16::<LittleEndian>()? as usize;
        let mut name = vec![0u8; n];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?;
        let kind = ParamKind::from_code(r.read_u8()?)?;
        let len = r.read_u64::<LittleEndian>()? as usize;
        items.push((name, kind, len));
    }
    let layout = Layout::from_entries(items);
    let total = r.read_u64::<LittleEndian>()? as usize;
    ensure!(total == layout.total_len(), Format, "checkpoint holds {total} values, layout needs {}", layout.total_len());
    let mut values = vec![0f32; total];
    r.read_f32_into::<LittleEndian>(&mut values)?;
    Ok(Checkpoint { digest, params: ParamVector::new(Arc::new(layout), values)? })
}
