//! Little-endian binary container shared by observation (`KSOB`) and
//! model-error (`KSMZ`) series.
//!
//! ```text
//! offset  size  field
//! 0       4     magic
//! 4       4     version (u32) = 1
//! 8       4     K, modes per sample (u32)
//! 12      8     T (u64)
//! 20      8     delta (f64)
//! 28      ...   samples: K complex values per time step, (re, im) f64 pairs
//! ```
//!
//! An observation file holds `T + 1` samples (`n = 0..=T`), a model-error
//! file holds `T` samples (`z^1..=z^T`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::C64;

pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;
pub const OBSERVATION_MAGIC: [u8; 4] = *b"KSOB";
pub const MODEL_ERROR_MAGIC: [u8; 4] = *b"KSMZ";

/// Decoded container contents.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSeries {
    pub k: usize,
    pub t: u64,
    pub delta: f64,
    pub samples: Vec<C64>,
}

/// Number of stored samples for a container with this magic and `T`.
pub fn sample_count(magic: [u8; 4], t: u64) -> Option<u64> {
    if magic == OBSERVATION_MAGIC {
        t.checked_add(1)
    } else {
        Some(t)
    }
}

pub fn encode(magic: [u8; 4], series: &RawSeries) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + series.samples.len() * 16);
    out.extend_from_slice(&magic);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(series.k as u32).to_le_bytes());
    out.extend_from_slice(&series.t.to_le_bytes());
    out.extend_from_slice(&series.delta.to_le_bytes());
    for c in &series.samples {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn write(path: &Path, magic: [u8; 4], series: &RawSeries) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode(magic, series))?;
    w.flush()?;
    Ok(())
}

pub fn read(path: &Path, magic: [u8; 4]) -> Result<RawSeries> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode(&bytes, magic).map_err(|detail| Error::Format { path: path.to_path_buf(), detail })
}

pub fn decode(bytes: &[u8], magic: [u8; 4]) -> std::result::Result<RawSeries, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!("file has {} bytes, shorter than the {HEADER_LEN}-byte header", bytes.len()));
    }
    if bytes[0..4] != magic {
        return Err(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[0..4]),
            String::from_utf8_lossy(&magic)
        ));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let k = u32_at(8) as usize;
    let t = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let delta = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let expected = sample_count(magic, t)
        .and_then(|n| n.checked_mul(k as u64))
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| "declared payload size overflows".to_string())?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != expected {
        return Err(format!("payload has {} bytes, header implies {expected}", payload.len()));
    }
    let samples = payload
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Ok(RawSeries { k, t, delta, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(k: usize, t: u64) -> RawSeries {
        let n = sample_count(OBSERVATION_MAGIC, t).unwrap() as usize * k;
        RawSeries {
            k,
            t,
            delta: 0.1,
            samples: (0..n).map(|i| C64::new(i as f64 * 0.5, -(i as f64) / 3.0)).collect(),
        }
    }

    #[test]
    fn size_matches_layout() {
        let bytes = encode(OBSERVATION_MAGIC, &sample(5, 2));
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 5 * 16);
    }

    #[test]
    fn truncated_and_corrupt_inputs_are_errors() {
        let bytes = encode(OBSERVATION_MAGIC, &sample(3, 4));
        assert!(decode(&bytes[..bytes.len() - 1], OBSERVATION_MAGIC).is_err());
        assert!(decode(&bytes[..10], OBSERVATION_MAGIC).is_err());
        assert!(decode(&bytes, MODEL_ERROR_MAGIC).is_err());
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(decode(&bad, OBSERVATION_MAGIC).unwrap_err().contains("version"));
        let mut huge = bytes;
        huge[12..20].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode(&huge, OBSERVATION_MAGIC).is_err());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample(4, 7);
        let back = decode(&encode(OBSERVATION_MAGIC, &s), OBSERVATION_MAGIC).unwrap();
        assert_eq!(s, back);
    }
}
