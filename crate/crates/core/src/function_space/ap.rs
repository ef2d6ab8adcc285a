use super::grid::Grid;
use super::weight::Weight;
use crate::error::{Error, Result};

/// Axis-aligned box `prod_k [lower_k, lower_k + side_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    pub lower: Vec<f64>,
    pub side: Vec<f64>,
}

impl Cube {
    pub fn new(lower: Vec<f64>, side: Vec<f64>) -> Result<Self> {
        if lower.len() != side.len() || side.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidInput("cube needs matching corner/side lengths and positive sides".into()));
        }
        Ok(Cube { lower, side })
    }
}

/// Dyadic boxes of side `2^{-g} 2 L_k`, `g = 0..=log2(m) - 2`, aligned to the
/// left end of the domain; every box holds at least 4 samples per axis.
pub fn dyadic_family(grid: &Grid) -> Vec<Cube> {
    let n = grid.dim();
    let gmax = grid.sizes().iter().map(|m| m.trailing_zeros()).min().unwrap_or(2) - 2;
    let mut out = Vec::new();
    for g in 0..=gmax {
        let per_axis = 1usize << g;
        let total = per_axis.pow(n as u32);
        for flat in 0..total {
            let mut rem = flat;
            let mut lower = vec![0.0; n];
            let mut side = vec![0.0; n];
            for k in (0..n).rev() {
                let i = rem % per_axis;
                rem /= per_axis;
                let l = grid.extents()[k];
                side[k] = 2.0 * l / per_axis as f64;
                lower[k] = -l + i as f64 * side[k];
            }
            out.push(Cube { lower, side });
        }
    }
    out
}

/// Index range of sample points with midpoint in `[lo, lo + side)`.
fn axis_range(mids: &[f64], lo: f64, side: f64) -> (usize, usize) {
    let start = mids.partition_point(|&x| x < lo);
    let end = mids.partition_point(|&x| x < lo + side);
    (start, end)
}

/// `(avg_Q gamma) (avg_Q gamma^{-1/(p-1)})^{p-1}` for one box.
pub fn ap_average(gamma: &Weight, p: f64, cube: &Cube) -> Result<f64> {
    let grid = gamma.grid();
    let n = grid.dim();
    if cube.lower.len() != n {
        return Err(Error::ShapeMismatch { expected: format!("{n}-dimensional cube"), found: format!("{}", cube.lower.len()) });
    }
    let ranges: Vec<(usize, usize)> =
        (0..n).map(|k| axis_range(&grid.axis_midpoints(k), cube.lower[k], cube.side[k])).collect();
    if ranges.iter().any(|(a, b)| a >= b) {
        return Err(Error::InvalidInput(format!("cube at {:?} contains no grid points", cube.lower)));
    }
    let e = -1.0 / (p - 1.0);
    let (mut s1, mut s2, mut count) = (0.0, 0.0, 0usize);
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        let w = gamma.values()[grid.ravel(&idx)];
        s1 += w;
        s2 += w.powf(e);
        count += 1;
        let mut k = n;
        loop {
            if k == 0 {
                let c = count as f64;
                return Ok((s1 / c) * (s2 / c).powf(p - 1.0));
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < ranges[k].1 {
                break;
            }
            idx[k] = ranges[k].0;
        }
    }
}

/// Largest A_p average over a family of boxes (the dyadic family by default).
pub fn ap_constant(gamma: &Weight, p: f64, cubes: Option<&[Cube]>) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidInput(format!("A_p exponent must lie in (1, inf), got {p}")));
    }
    let default;
    let cubes = match cubes {
        Some(c) => c,
        None => {
            default = dyadic_family(gamma.grid());
            &default
        }
    };
    if cubes.is_empty() {
        return Err(Error::InvalidInput("empty cube family".into()));
    }
    let mut best = 0.0f64;
    for c in cubes {
        best = best.max(ap_average(gamma, p, c)?);
    }
    Ok(best)
}

/// Fails with [`Error::ApViolation`] when the constant exceeds `bound`.
pub fn require_ap(gamma: &Weight, p: f64, bound: f64) -> Result<f64> {
    let constant = ap_constant(gamma, p, None)?;
    if constant > bound {
        return Err(Error::ApViolation { constant, bound });
    }
    Ok(constant)
}
