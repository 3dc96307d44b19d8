//! "TQED" binary dataset files.
//!
//! All fields little-endian. Header (36 bytes):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `TQED`                            |
//! | 4      | 4    | version (u32, = 1)                      |
//! | 8      | 8    | state count (u64)                       |
//! | 16     | 4    | flags (u32): bit0 noise-free, bit1 seed |
//! | 20     | 8    | noise weight (f64)                      |
//! | 28     | 8    | master seed (u64, 0 unless bit1)        |
//!
//! Each state record is 1026 bytes: the 64 entries of ρ row-major as
//! `(re, im)` f64 pairs, then the SLOCC label id byte and the augmentation
//! pattern byte.

use std::path::Path;

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::oracle::SloccLabel;
use crate::quantum::{DensityMatrix, C64, DENSITY_TOL, DIM};
use crate::stategen::AugmentationPattern;

pub const MAGIC: &[u8; 4] = b"TQED";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 36;
pub const RECORD_LEN: usize = DIM * DIM * 16 + 2;

const FLAG_NOISE_FREE: u32 = 1;
const FLAG_SEED: u32 = 1 << 1;
const KNOWN_FLAGS: u32 = FLAG_NOISE_FREE | FLAG_SEED;

pub fn encode_dataset(data: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(data.len() as u64).to_le_bytes());
    let mut flags = 0;
    if data.noise == 0.0 {
        flags |= FLAG_NOISE_FREE;
    }
    if data.seed.is_some() {
        flags |= FLAG_SEED;
    }
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&data.noise.to_le_bytes());
    out.extend_from_slice(&data.seed.unwrap_or(0).to_le_bytes());
    for s in &data.samples {
        for z in s.rho.entries() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out.push(s.label.id() as u8);
        out.push(s.pattern.bits());
    }
    out
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

/// Decodes a whole file image, validating every state.
pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(format_err(0, "missing \"TQED\" magic"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(format_err(
            bytes.len(),
            format!("header truncated: {} of {HEADER_LEN} bytes", bytes.len()),
        ));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            found: version.into(),
            supported: VERSION.into(),
        });
    }
    let count = u64_at(bytes, 8);
    let flags = u32_at(bytes, 16);
    if flags & !KNOWN_FLAGS != 0 {
        return Err(format_err(
            16,
            format!("unknown flag bits {:#x}", flags & !KNOWN_FLAGS),
        ));
    }
    let noise = f64_at(bytes, 20);
    if !(0.0..=1.0).contains(&noise) {
        return Err(format_err(
            20,
            format!("noise weight {noise} not in [0, 1]"),
        ));
    }
    if (flags & FLAG_NOISE_FREE != 0) != (noise == 0.0) {
        return Err(format_err(
            16,
            format!("noise-free flag disagrees with noise weight {noise}"),
        ));
    }
    let raw_seed = u64_at(bytes, 28);
    let seed = if flags & FLAG_SEED != 0 {
        Some(raw_seed)
    } else if raw_seed != 0 {
        return Err(format_err(28, "seed field set without the seed flag"));
    } else {
        None
    };

    let payload = bytes.len() - HEADER_LEN;
    let complete = payload / RECORD_LEN;
    if count != complete as u64 || !payload.is_multiple_of(RECORD_LEN) {
        let offset = HEADER_LEN as u64 + (count.min(complete as u64)) * RECORD_LEN as u64;
        return Err(Error::Format {
            offset: offset.min(bytes.len() as u64),
            message: format!(
                "header declares {count} states ({} payload bytes) but file holds {complete} complete states ({payload} payload bytes)",
                count.saturating_mul(RECORD_LEN as u64)
            ),
        });
    }

    let mut samples = Vec::with_capacity(complete);
    for (i, rec) in bytes[HEADER_LEN..].chunks_exact(RECORD_LEN).enumerate() {
        let base = HEADER_LEN + i * RECORD_LEN;
        let entries: Vec<C64> = rec[..RECORD_LEN - 2]
            .chunks_exact(16)
            .map(|c| C64::new(f64_at(c, 0), f64_at(c, 8)))
            .collect();
        let rho = DensityMatrix::from_entries_unchecked(&entries);
        if let Some(v) = rho.validate(DENSITY_TOL).violation {
            return Err(format_err(base, format!("state {i}: {v}")));
        }
        let label_byte = rec[RECORD_LEN - 2];
        let label = SloccLabel::from_id(label_byte.into()).ok_or_else(|| {
            format_err(
                base + RECORD_LEN - 2,
                format!("state {i}: bad label id {label_byte}"),
            )
        })?;
        let pattern_byte = rec[RECORD_LEN - 1];
        let pattern = AugmentationPattern::new(pattern_byte).map_err(|_| {
            format_err(
                base + RECORD_LEN - 1,
                format!("state {i}: bad pattern {pattern_byte}"),
            )
        })?;
        samples.push(Sample {
            rho,
            label,
            pattern,
            ket: None,
        });
    }
    Ok(Dataset {
        samples,
        seed,
        noise,
    })
}

pub fn save_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_dataset(data)).map_err(|e| Error::io(path, e))
}

/// Loads a dataset file; format errors are prefixed with the path.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes).map_err(|e| match e {
        Error::Format { offset, message } => Error::Format {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}
