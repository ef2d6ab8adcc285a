//! Seeded random test functions.
//!
//! Coefficients are attached to signed integer frequencies rather than to
//! bins, so the same seed describes the same function on every grid whose
//! lattice contains the band.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::function_space::{inverse_transform, Grid, GridFunction, Spectrum, TimeSeries, ValueSpace};
use crate::rng::{purpose, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct BandLimited {
    /// Frequencies satisfy `|j_k| < band[k]` per axis.
    pub band: Vec<usize>,
    /// Amplitudes decay like `(1 + |j|^2)^{-decay/2}`.
    pub decay: f64,
}

impl BandLimited {
    /// Inner half of the lattice of `grid`.
    pub fn inner_half(grid: &Grid) -> Self {
        BandLimited { band: grid.sizes().iter().map(|m| (m / 4).max(1)).collect(), decay: 1.0 }
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if self.band.len() != grid.dim() {
            return Err(Error::ShapeMismatch { expected: format!("{} band limits", grid.dim()), found: format!("{}", self.band.len()) });
        }
        for (k, (&b, &m)) in self.band.iter().zip(grid.sizes()).enumerate() {
            if b == 0 || b > m / 2 {
                return Err(Error::InvalidInput(format!("band {b} on axis {k} must lie in 1..={}", m / 2)));
            }
        }
        Ok(())
    }

    /// Coefficients in lexicographic order of the signed frequency tuple.
    /// Each component has its own stream, so truncating `N` keeps the
    /// leading components.
    fn coefficients(&self, dim: usize, seed: u64, index: u64) -> Vec<(Vec<i64>, Vec<Complex64>)> {
        let mut rngs: Vec<_> = (0..dim as u64).map(|i| stream(seed, &[purpose::CORPUS, index, i])).collect();
        let mut out = Vec::new();
        let mut j: Vec<i64> = self.band.iter().map(|&b| -(b as i64) + 1).collect();
        loop {
            let r2: f64 = j.iter().map(|&x| (x * x) as f64).sum();
            let amp = (1.0 + r2).powf(-self.decay / 2.0);
            let v = rngs
                .iter_mut()
                .map(|rng| {
                    let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                    Complex64::new(re, im) * amp
                })
                .collect();
            out.push((j.clone(), v));
            let mut k = j.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if j[k] + 1 < self.band[k] as i64 {
                    j[k] += 1;
                    break;
                }
                j[k] = -(self.band[k] as i64) + 1;
            }
        }
    }

    /// Member `index` of the corpus for `seed`.
    pub fn sample(&self, grid: &Grid, space: ValueSpace, seed: u64, index: u64) -> Result<GridFunction> {
        self.check(grid)?;
        let n = space.dim();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len() * n];
        for (j, v) in self.coefficients(n, seed, index) {
            let idx: Vec<usize> = j.iter().zip(grid.sizes()).map(|(&jk, &m)| jk.rem_euclid(m as i64) as usize).collect();
            let bin = grid.ravel(&idx);
            coeffs[bin * n..(bin + 1) * n].copy_from_slice(&v);
        }
        Ok(inverse_transform(&Spectrum::new(grid.clone(), space, coeffs)?))
    }

    pub fn corpus(&self, grid: &Grid, space: ValueSpace, seed: u64, count: usize) -> Result<Vec<GridFunction>> {
        (0..count as u64).map(|i| self.sample(grid, space, seed, i)).collect()
    }

    /// `f(t) = u_0 + sin(w_1 t) u_1 + t cos(w_2 t) u_2`, with `u_r` drawn from
    /// the band and `w_r` in `[1, 4)`; smooth in time, zero-mean free.
    pub fn time_series(
        &self,
        grid: &Grid,
        space: ValueSpace,
        seed: u64,
        index: u64,
        dt: f64,
        steps: usize,
    ) -> Result<TimeSeries> {
        let parts: Vec<GridFunction> = (0..3).map(|r| self.sample(grid, space, seed, 3 * index + r + (1 << 32))).collect::<Result<_>>()?;
        let mut rng = stream(seed, &[purpose::CORPUS, index, u64::MAX]);
        let w: [f64; 3] = std::array::from_fn(|_| rng.gen_range(1.0..4.0));
        let snaps = (0..=steps)
            .map(|j| {
                let t = j as f64 * dt;
                let a = [(w[0] * t).sin(), (w[1] * t).sin(), t * (w[2] * t).cos()];
                let mut u = parts[0].scale(Complex64::new(a[0], 0.0));
                for r in 1..3 {
                    u = u.axpby(Complex64::new(1.0, 0.0), &parts[r], Complex64::new(a[r], 0.0))?;
                }
                Ok(u)
            })
            .collect::<Result<Vec<_>>>()?;
        TimeSeries::new(dt, snaps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::forward_transform;
    use std::f64::consts::PI;

    #[test]
    fn same_function_on_refined_grid() {
        let g = Grid::new(vec![PI, 2.0], vec![16, 8]).unwrap();
        let fine = g.refined(2).unwrap();
        let b = BandLimited::inner_half(&g);
        let sp = ValueSpace::new(2, 2.0).unwrap();
        let u = b.sample(&g, sp, 5, 3).unwrap();
        let v = b.sample(&fine, sp, 5, 3).unwrap();
        for (bin, x) in g.points().iter().enumerate() {
            let fi: Vec<usize> = x.iter().enumerate().map(|(k, &xk)| ((xk + g.extents()[k]) / fine.spacing(k)).round() as usize).collect();
            let fb = fine.ravel(&fi);
            for i in 0..2 {
                assert!((u.at(bin)[i] - v.at(fb)[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn support_is_inside_the_band() {
        let g = Grid::new(vec![PI], vec![32]).unwrap();
        let u = BandLimited::inner_half(&g).sample(&g, ValueSpace::scalar(), 1, 0).unwrap();
        let s = forward_transform(&u);
        for bin in 0..32 {
            if Grid::signed_index(bin, 32).abs() >= 8 {
                assert!(s.at(bin)[0].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn band_wider_than_lattice_rejected() {
        let g = Grid::new(vec![PI], vec![8]).unwrap();
        let b = BandLimited { band: vec![5], decay: 0.0 };
        assert!(b.sample(&g, ValueSpace::scalar(), 0, 0).is_err());
    }
}
