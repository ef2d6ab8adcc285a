//! Flat little-endian binary dumps.
//!
//! Grid function: `n: u32`, `m_k: u32 x n`, `L_k: f64 x n`, `N: u32`, `q: f64`,
//! then `(re, im): f64 x 2` for every point and component, point-major in
//! row-major point order. Weight: the same grid header followed by one `f64`
//! per point. Time series: `count: u32`, `dt: f64`, then `count` grid-function
//! records sharing one grid and value space.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::function_space::{Grid, GridFunction, TimeSeries, ValueSpace, Weight};

const MAX_DIM: usize = 3;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Decode(format!("truncated input: need {n} bytes at offset {}, have {}", self.pos, self.bytes.len() - self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    /// Fail before allocating when fewer than `count * width` bytes remain.
    fn expect(&self, count: usize, width: usize) -> Result<()> {
        match count.checked_mul(width) {
            Some(need) if need <= self.remaining() => Ok(()),
            _ => Err(Error::Decode(format!("payload of {count} x {width} bytes exceeds remaining {}", self.remaining()))),
        }
    }

    fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Decode(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }
}

fn put_grid(out: &mut Vec<u8>, g: &Grid) {
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    for &m in g.sizes() {
        out.extend_from_slice(&(m as u32).to_le_bytes());
    }
    for &l in g.extents() {
        out.extend_from_slice(&l.to_le_bytes());
    }
}

fn read_grid(r: &mut Reader) -> Result<Grid> {
    let n = r.u32()? as usize;
    if n == 0 || n > MAX_DIM {
        return Err(Error::Decode(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    let sizes = (0..n).map(|_| r.u32().map(|m| m as usize)).collect::<Result<Vec<_>>>()?;
    let extents = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    Grid::new(extents, sizes).map_err(|e| Error::Decode(e.to_string()))
}

fn grid_len(g: &Grid) -> Result<usize> {
    g.sizes().iter().try_fold(1usize, |acc, &m| acc.checked_mul(m)).ok_or_else(|| Error::Decode("grid size overflows".into()))
}

fn put_function(out: &mut Vec<u8>, u: &GridFunction) {
    put_grid(out, u.grid());
    out.extend_from_slice(&(u.space().dim() as u32).to_le_bytes());
    out.extend_from_slice(&u.space().q().to_le_bytes());
    for v in u.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
}

fn read_function(r: &mut Reader) -> Result<GridFunction> {
    let grid = read_grid(r)?;
    let dim = r.u32()? as usize;
    let q = r.f64()?;
    let space = ValueSpace::new(dim, q).map_err(|e| Error::Decode(e.to_string()))?;
    let count = grid_len(&grid)?.checked_mul(dim).ok_or_else(|| Error::Decode("value count overflows".into()))?;
    r.expect(count, 16)?;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let (re, im) = (r.f64()?, r.f64()?);
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::Decode("non-finite value".into()));
        }
        values.push(Complex64::new(re, im));
    }
    GridFunction::new(grid, space, values).map_err(|e| Error::Decode(e.to_string()))
}

pub fn encode_grid_function(u: &GridFunction) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 16 * u.values().len());
    put_function(&mut out, u);
    out
}

pub fn decode_grid_function(bytes: &[u8]) -> Result<GridFunction> {
    let mut r = Reader { bytes, pos: 0 };
    let u = read_function(&mut r)?;
    r.finish()?;
    Ok(u)
}

pub fn encode_weight(w: &Weight) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * w.values().len());
    put_grid(&mut out, w.grid());
    for v in w.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes into a tabulated weight; the original closed form is not stored.
pub fn decode_weight(bytes: &[u8]) -> Result<Weight> {
    let mut r = Reader { bytes, pos: 0 };
    let grid = read_grid(&mut r)?;
    let count = grid_len(&grid)?;
    r.expect(count, 8)?;
    let values = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Weight::tabulated(&grid, values).map_err(|e| Error::Decode(e.to_string()))
}

pub fn encode_time_series(s: &TimeSeries) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(&s.dt().to_le_bytes());
    for u in s.snapshots() {
        put_function(&mut out, u);
    }
    out
}

pub fn decode_time_series(bytes: &[u8]) -> Result<TimeSeries> {
    let mut r = Reader { bytes, pos: 0 };
    let count = r.u32()? as usize;
    let dt = r.f64()?;
    // every record carries at least a one-axis header
    r.expect(count, 4 + 4 + 8 + 4 + 8)?;
    let mut snaps = Vec::with_capacity(count);
    for _ in 0..count {
        let u = read_function(&mut r)?;
        if let Some(first) = snaps.first() {
            u.check_compatible(first).map_err(|e| Error::Decode(e.to_string()))?;
        }
        snaps.push(u);
    }
    r.finish()?;
    TimeSeries::new(dt, snaps).map_err(|e| Error::Decode(e.to_string()))
}
