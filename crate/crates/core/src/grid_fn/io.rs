//! Flat binary and JSON persistence for `f64` grid functions.

use std::io::{Read, Write};

use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};

use super::GridFunction;

const MAGIC: &[u8; 4] = b"GFN1";

/// Layout: magic, u32 d, u32 J, i32 root gen, d x i64 root coords, then `2^{Jd}` little-endian f64.
pub fn write_binary<W: Write>(f: &GridFunction<f64>, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(f.dim() as u32).to_le_bytes())?;
    w.write_all(&f.depth().to_le_bytes())?;
    w.write_all(&f.root().gen.to_le_bytes())?;
    for c in &f.root().coords {
        w.write_all(&c.to_le_bytes())?;
    }
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<GridFunction<f64>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config("not a grid function file".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let depth = u32::from_le_bytes(b4);
    r.read_exact(&mut b4)?;
    let gen = i32::from_le_bytes(b4);
    if dim == 0 || dim > 4 || depth as usize * dim > 30 {
        return Err(Error::Config("corrupt grid function header".into()));
    }
    let mut b8 = [0u8; 8];
    let mut coords = Vec::with_capacity(dim);
    for _ in 0..dim {
        r.read_exact(&mut b8)?;
        coords.push(i64::from_le_bytes(b8));
    }
    let n = 1usize << (depth as usize * dim);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    GridFunction::new(dim, depth, Cube::new(gen, coords), values)
}

pub fn to_json(f: &GridFunction<f64>) -> Result<String> {
    Ok(serde_json::to_string(f)?)
}

pub fn from_json(s: &str) -> Result<GridFunction<f64>> {
    let f: GridFunction<f64> = serde_json::from_str(s)?;
    GridFunction::new(f.dim(), f.depth(), f.root().clone(), f.into_values())
}
