//! Raw samples as little-endian f64 behind a 16-byte header:
//! magic (4 bytes), version (u32), count (u64).

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const SAMPLE_MAGIC: [u8; 4] = *b"SXPI";
pub const SAMPLE_VERSION: u32 = 1;

pub fn write_samples<W: Write>(mut w: W, samples: &[f64]) -> Result<()> {
    w.write_all(&SAMPLE_MAGIC)?;
    w.write_all(&SAMPLE_VERSION.to_le_bytes())?;
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * samples.len());
    for x in samples {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_samples<R: Read>(mut r: R) -> Result<Vec<f64>> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if head[..4] != SAMPLE_MAGIC {
        return Err(Error::Config("not a sample file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
    if version != SAMPLE_VERSION {
        return Err(Error::Config(format!("unsupported sample file version {version}")));
    }
    let count = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes")) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != 8 * count {
        return Err(Error::Config(format!("sample file holds {} bytes, header promises {count} values", body.len())));
    }
    Ok(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}
