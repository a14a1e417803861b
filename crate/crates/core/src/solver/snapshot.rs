//! Flat binary snapshot layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | `u32` dimension `n` |
//! | 4 | `u32` points per axis `N` |
//! | 8 | `f64` box extent `L` |
//! | 8 | `f64` time `t` |
//! | 8 N^n | `f64` samples, row-major (last axis fastest), sample `j` at `-L/2 + j L/N` |

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

pub const HEADER_BYTES: usize = 24;

pub fn write_snapshot<W: Write>(mut out: W, field: &Field, t: f64) -> Result<()> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(HEADER_BYTES + 8 * grid.len());
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.points() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.extent().to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads a snapshot back as a field on a freshly built grid, plus its time.
pub fn read_snapshot<R: Read>(mut input: R) -> Result<(Field, f64)> {
    let mut header = [0u8; HEADER_BYTES];
    input
        .read_exact(&mut header)
        .map_err(|e| Error::Snapshot(format!("short header: {e}")))?;
    let dim = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
    let points = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let extent = f64::from_le_bytes(header[8..16].try_into().unwrap());
    let t = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let grid = Grid::new(dim, points, extent).map_err(|e| Error::Snapshot(e.to_string()))?;
    let mut payload = vec![0u8; 8 * grid.len()];
    input
        .read_exact(&mut payload)
        .map_err(|e| Error::Snapshot(format!("short payload: {e}")))?;
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Snapshot(format!("{} trailing bytes", rest.len())));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = Field::new(&grid, values).map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok((field, t))
}
