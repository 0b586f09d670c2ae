//! Matrix export as CSV and as a compact binary format.
//!
//! Binary layout: a 32-byte header followed by row-major little-endian `f64`.
//!
//! | bytes  | content                                   |
//! |--------|-------------------------------------------|
//! | 0..8   | magic `HFMATRIX`                          |
//! | 8..16  | rows, `u64` little-endian                 |
//! | 16..24 | columns, `u64` little-endian              |
//! | 24..32 | ordering tag, 8 ASCII bytes               |
//!
//! The ordering tag names the layout of rows and columns. `NODE` followed by
//! the dimension and component count (`NODE1D3\0`) marks node-major unknowns;
//! `PLAIN\0\0\0` marks a matrix with no grid meaning.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const MAGIC: &[u8; 8] = b"HFMATRIX";

/// Ordering tag for node-major unknowns on `grid`.
pub fn node_major_tag(grid: &Grid) -> [u8; 8] {
    let mut tag = *b"NODE0D0\0";
    tag[4] = b'0' + grid.dim as u8;
    tag[6] = b'0' + grid.ncomp() as u8;
    tag
}

pub const PLAIN_TAG: [u8; 8] = *b"PLAIN\0\0\0";

pub fn encode_binary(m: &DMatrix<f64>, tag: [u8; 8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    out.extend_from_slice(&tag);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<(DMatrix<f64>, [u8; 8])> {
    if bytes.len() < 32 || &bytes[..8] != MAGIC {
        return Err(Error::Invalid("not a matrix file".into()));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes")) as usize;
    let (rows, cols) = (word(8), word(16));
    let tag: [u8; 8] = bytes[24..32].try_into().expect("8 bytes");
    if bytes.len() != 32 + 8 * rows * cols {
        return Err(Error::Invalid(format!("matrix file length does not match shape {rows}x{cols}")));
    }
    let data: Vec<f64> =
        bytes[32..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((DMatrix::from_row_slice(rows, cols, &data), tag))
}

/// CSV with a header row naming columns `c0..`, values in shortest
/// round-trip form.
pub fn encode_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("c{j}")).collect();
    s.push_str(&header.join(","));
    s.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_binary(path: &Path, m: &DMatrix<f64>, tag: [u8; 8]) -> Result<()> {
    write_atomic(path, &encode_binary(m, tag))
}

pub fn read_binary(path: &Path) -> Result<(DMatrix<f64>, [u8; 8])> {
    decode_binary(&fs::read(path)?)
}
