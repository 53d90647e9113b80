//! Little-endian dataset file: magic `FWSR`, version, class count, frame
//! length, length-prefixed scheme names, sample count, then per sample the
//! label, SNR and the `x` and `s_star` frames as `f32` (I row, then Q row).

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::dataset::{Dataset, IqFrame, LabeledSample};
use crate::error::{ensure, Error, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"FWSR";
pub const DATASET_VERSION: u16 = 1;

pub fn write_dataset<W: Write>(mut w: W, ds: &Dataset) -> Result<()> {
    ensure!(ds.num_classes() <= u16::MAX as usize, Format, "too many classes");
    ensure!(ds.frame_len <= u16::MAX as usize, Format, "frame length too large for format");
    w.write_all(DATASET_MAGIC)?;
    w.write_u16::<LittleEndian>(DATASET_VERSION)?;
    w.write_u16::<LittleEndian>(ds.num_classes() as u16)?;
    w.write_u16::<LittleEndian>(ds.frame_len as u16)?;
    for name in &ds.scheme_names {
        ensure!(name.len() <= u16::MAX as usize, Format, "scheme name too long");
        w.write_u16::<LittleEndian>(name.len() as u16)?;
        w.write_all(name.as_bytes())?;
    }
    w.write_u64::<LittleEndian>(ds.samples.len() as u64)?;
    for s in &ds.samples {
        ensure!(s.x.len() == ds.frame_len && s.s_star.len() == ds.frame_len, Format, "sample frame length mismatch");
        w.write_u16::<LittleEndian>(s.label as u16)?;
        w.write_f32::<LittleEndian>(s.snr_db)?;
        for v in s.x.as_slice().iter().chain(s.s_star.as_slice()) {
            w.write_f32::<LittleEndian>(*v)?;
        }
    }
    Ok(())
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    ensure!(&magic == DATASET_MAGIC, Format, "not a dataset file (magic {magic:?})");
    let version = r.read_u16::<LittleEndian>()?;
    ensure!(version == DATASET_VERSION, Format, "unsupported dataset version {version}");
    let m = r.read_u16::<LittleEndian>()? as usize;
    let len = r.read_u16::<LittleEndian>()? as usize;
    let mut scheme_names = Vec::with_capacity(m);
    for _ in 0..m {
        let n = r.read_u16::<LittleEndian>()? as usize;
        let mut buf = vec![0u8; n];
        r.read_exact(&mut buf)?;
        scheme_names.push(String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?);
    }
    let count = r.read_u64::<LittleEndian>()? as usize;
    let mut samples = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        let label = r.read_u16::<LittleEndian>()? as usize;
        ensure!(label < m, Format, "label {label} out of range for {m} classes");
        let snr_db = r.read_f32::<LittleEndian>()?;
        let mut x = vec![0f32; 2 * len];
        r.read_f32_into::<LittleEndian>(&mut x)?;
        let mut s = vec![0f32; 2 * len];
        r.read_f32_into::<LittleEndian>(&mut s)?;
        samples.push(LabeledSample {
            x: IqFrame::from_interleaved_rows(x),
            s_star: IqFrame::from_interleaved_rows(s),
            label,
            snr_db,
        });
    }
    Ok(Dataset { scheme_names, frame_len: len, samples })
}
