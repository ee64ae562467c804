//! Binary field files (`FNLSFLD1`) and atomic file writes.
//!
//! Layout, little-endian: 8-byte magic, `u32` version, `u32` dim, `u32` n,
//! `f64` half-width, `f64` s, `f64` p, then `n^dim` samples with the last
//! axis fastest.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{Error, Field, Grid, Result};

pub const MAGIC: &[u8; 8] = b"FNLSFLD1";
pub const VERSION: u32 = 1;
const HEADER: usize = 8 + 4 * 3 + 8 * 3;

/// Optional `(s, p)` metadata stored beside the samples; zero means unset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldMeta {
    pub s: f64,
    pub p: f64,
}

pub fn encode(f: &Field, meta: FieldMeta) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(HEADER + 8 * f.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&g.half_width().to_le_bytes());
    out.extend_from_slice(&meta.s.to_le_bytes());
    out.extend_from_slice(&meta.p.to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<(Field, FieldMeta)> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER {
        return Err(Error::Truncated { expected: HEADER, found: bytes.len() });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (dim, n) = (u32_at(12) as usize, u32_at(16) as usize);
    let half_width = f64_at(20);
    let meta = FieldMeta { s: f64_at(28), p: f64_at(36) };
    let grid = Grid::new(dim, n, half_width)
        .map_err(|e| Error::DimensionMismatch(format!("header d={dim}, n={n}, L={half_width}: {e}")))?;
    let expected = grid
        .len()
        .checked_mul(8)
        .and_then(|b| b.checked_add(HEADER))
        .ok_or_else(|| Error::DimensionMismatch(format!("{n}^{dim} samples overflow")))?;
    if bytes.len() < expected {
        return Err(Error::Truncated { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(Error::DimensionMismatch(format!(
            "{} trailing bytes after {}^{} samples",
            bytes.len() - expected,
            n,
            dim
        )));
    }
    let values = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((Field::new(grid, values)?, meta))
}

pub fn save_field(f: &Field, path: &Path) -> Result<()> {
    save_field_with(f, FieldMeta::default(), path)
}

pub fn save_field_with(f: &Field, meta: FieldMeta, path: &Path) -> Result<()> {
    atomic_write(path, &encode(f, meta))
}

pub fn load_field(path: &Path) -> Result<Field> {
    Ok(load_field_with_meta(path)?.0)
}

pub fn load_field_with_meta(path: &Path) -> Result<(Field, FieldMeta)> {
    decode(&fs::read(path)?)
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}
