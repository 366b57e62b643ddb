//! Binary field dumps.
//!
//! Layout, all little-endian: magic `CNSF`, version `u32`, `d` as `u32`, `h`
//! and `R` as `f64`, slice count `M` as `u32`, then `(re, im)` `f64` pairs in
//! canonical mode order, components innermost, slice by slice. The component
//! count follows from the payload length.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::FrequencyGrid;

pub const MAGIC: &[u8; 4] = b"CNSF";
pub const VERSION: u32 = 1;

pub fn write_dump<W: Write>(mut out: W, slices: &[SpectralField]) -> Result<()> {
    let first = slices.first().ok_or_else(|| Error::Format("nothing to dump".into()))?;
    let g = first.grid();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(g.dim() as u32).to_le_bytes())?;
    out.write_all(&g.spacing().to_le_bytes())?;
    out.write_all(&g.radius().to_le_bytes())?;
    out.write_all(&(slices.len() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(first.data().len() * 16);
    for s in slices {
        if !s.grid().same_as(g) || s.ncomp() != first.ncomp() {
            return Err(Error::Format("dumped slices must share grid and kind".into()));
        }
        buf.clear();
        for v in s.data() {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_dump<R: Read>(mut input: R) -> Result<(Arc<FrequencyGrid>, Vec<SpectralField>)> {
    let mut head = [0u8; 32];
    input.read_exact(&mut head).map_err(|_| Error::Format("truncated header".into()))?;
    if &head[0..4] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (d, h, r, m) = (u32_at(8) as usize, f64_at(12), f64_at(20), u32_at(28) as usize);
    let grid = FrequencyGrid::build(d, h, r)?;
    let mut payload = vec![];
    input.read_to_end(&mut payload)?;
    let per_comp = grid.len() * m * 16;
    if m == 0 || payload.is_empty() || payload.len() % per_comp != 0 {
        return Err(Error::Format(format!(
            "payload of {} bytes does not fit {} slices of {} modes",
            payload.len(),
            m,
            grid.len()
        )));
    }
    let ncomp = payload.len() / per_comp;
    let values: Vec<Complex64> = payload
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(f64::from_le_bytes(c[0..8].try_into().unwrap()), f64::from_le_bytes(c[8..16].try_into().unwrap()))
        })
        .collect();
    let slices = values
        .chunks_exact(grid.len() * ncomp)
        .map(|c| SpectralField::from_data(&grid, ncomp, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok((grid, slices))
}
