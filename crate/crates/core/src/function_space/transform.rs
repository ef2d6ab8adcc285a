use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{Grid, MultiIndex, ValueSpace};
use crate::error::{Error, Result};

/// `l_q^N`-valued samples on a periodic grid.
///
/// Values are stored point-major: entry `(point, i)` lives at `point * N + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    space: ValueSpace,
    values: Vec<Complex64>,
}

/// Fourier coefficients of a [`GridFunction`], same layout, indexed by DFT bin.
///
/// Normalized so that `u(x) = sum_xi c(xi) e^{i xi . x}` exactly on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    space: ValueSpace,
    coeffs: Vec<Complex64>,
}

fn check_values(grid: &Grid, space: &ValueSpace, values: &[Complex64]) -> Result<()> {
    let expected = grid.len() * space.dim();
    if values.len() != expected {
        return Err(Error::ShapeMismatch {
            expected: format!("{expected} values"),
            found: format!("{} values", values.len()),
        });
    }
    if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidInput("grid function has non-finite entries".into()));
    }
    Ok(())
}

impl GridFunction {
    pub fn new(grid: Grid, space: ValueSpace, values: Vec<Complex64>) -> Result<Self> {
        check_values(&grid, &space, &values)?;
        Ok(GridFunction { grid, space, values })
    }

    pub fn zeros(grid: &Grid, space: ValueSpace) -> Self {
        GridFunction {
            values: vec![Complex64::new(0.0, 0.0); grid.len() * space.dim()],
            grid: grid.clone(),
            space,
        }
    }

    /// Sample `f(x)` (which writes the `N` components into the slice) at every point.
    pub fn from_fn(grid: &Grid, space: ValueSpace, mut f: impl FnMut(&[f64], &mut [Complex64])) -> Result<Self> {
        let n = space.dim();
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len() * n];
        for (p, x) in grid.points().iter().enumerate() {
            f(x, &mut values[p * n..(p + 1) * n]);
        }
        GridFunction::new(grid.clone(), space, values)
    }

    /// Scalar profile `s(x)` times a fixed vector `v`.
    pub fn separable(grid: &Grid, space: ValueSpace, s: impl Fn(&[f64]) -> Complex64, v: &[Complex64]) -> Result<Self> {
        if v.len() != space.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} components", space.dim()),
                found: format!("{}", v.len()),
            });
        }
        GridFunction::from_fn(grid, space, |x, out| {
            let a = s(x);
            for (o, vi) in out.iter_mut().zip(v) {
                *o = a * vi;
            }
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> ValueSpace {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// The `N` components at one grid point.
    pub fn at(&self, point: usize) -> &[Complex64] {
        let n = self.space.dim();
        &self.values[point * n..(point + 1) * n]
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z *= c);
        out
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: Complex64, other: &GridFunction, b: Complex64) -> Result<GridFunction> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(GridFunction { grid: self.grid.clone(), space: self.space, values })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.axpby(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.axpby(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    pub fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid || self.space.dim() != other.space.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?} x {}", self.grid.sizes(), self.space.dim()),
                found: format!("{:?} x {}", other.grid.sizes(), other.space.dim()),
            });
        }
        Ok(())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Sup-norm of the difference, relative to the sup-norm of `reference`.
    pub fn rel_diff(&self, reference: &GridFunction) -> f64 {
        let d = self
            .values
            .iter()
            .zip(&reference.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        let r = reference.max_abs();
        if r == 0.0 {
            d
        } else {
            d / r
        }
    }

    /// Map each point's component vector through `f`.
    pub fn map_points(&self, mut f: impl FnMut(usize, &[Complex64], &mut [Complex64])) -> GridFunction {
        let n = self.space.dim();
        let mut values = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for p in 0..self.grid.len() {
            f(p, &self.values[p * n..(p + 1) * n], &mut values[p * n..(p + 1) * n]);
        }
        GridFunction { grid: self.grid.clone(), space: self.space, values }
    }

    /// Same values reinterpreted on another grid with identical point count per axis.
    pub fn with_grid(&self, grid: Grid) -> Result<GridFunction> {
        if grid.sizes() != self.grid.sizes() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.grid.sizes()),
                found: format!("{:?}", grid.sizes()),
            });
        }
        Ok(GridFunction { grid, space: self.space, values: self.values.clone() })
    }
}

impl Spectrum {
    pub fn new(grid: Grid, space: ValueSpace, coeffs: Vec<Complex64>) -> Result<Self> {
        check_values(&grid, &space, &coeffs)?;
        Ok(Spectrum { grid, space, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> ValueSpace {
        self.space
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn at(&self, bin: usize) -> &[Complex64] {
        let n = self.space.dim();
        &self.coeffs[bin * n..(bin + 1) * n]
    }

    pub fn at_mut(&mut self, bin: usize) -> &mut [Complex64] {
        let n = self.space.dim();
        &mut self.coeffs[bin * n..(bin + 1) * n]
    }

    /// Multiply every bin by the scalar `m(bin)`.
    pub fn scale_bins(&mut self, mut m: impl FnMut(usize) -> Complex64) {
        let n = self.space.dim();
        for (bin, chunk) in self.coeffs.chunks_mut(n).enumerate() {
            let f = m(bin);
            chunk.iter_mut().for_each(|z| *z *= f);
        }
    }

    /// `sqrt(vol * sum |c|^2)`: equals the unweighted L_2(l_2) norm by Parseval.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.volume() * self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }
}

struct Plans {
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

fn plans(grid: &Grid) -> Plans {
    let mut planner = FftPlanner::new();
    Plans {
        forward: grid.sizes().iter().map(|&m| planner.plan_fft_forward(m)).collect(),
        inverse: grid.sizes().iter().map(|&m| planner.plan_fft_inverse(m)).collect(),
    }
}

/// In-place n-dimensional DFT of one scalar field laid out row-major.
fn fft_nd(data: &mut [Complex64], sizes: &[usize], ffts: &[Arc<dyn Fft<f64>>]) {
    let total: usize = sizes.iter().product();
    let mut line = Vec::new();
    for (axis, &m) in sizes.iter().enumerate() {
        let stride: usize = sizes[axis + 1..].iter().product();
        let outer = total / (m * stride);
        line.resize(m, Complex64::new(0.0, 0.0));
        for o in 0..outer {
            for s in 0..stride {
                let base = o * m * stride + s;
                for (j, z) in line.iter_mut().enumerate() {
                    *z = data[base + j * stride];
                }
                ffts[axis].process(&mut line);
                for (j, z) in line.iter().enumerate() {
                    data[base + j * stride] = *z;
                }
            }
        }
    }
}

/// `prod_k (-1)^{j'_k}`: the phase that moves the DFT origin to `x = -L`.
fn origin_phase(grid: &Grid, bin: usize) -> f64 {
    let parity: i64 = grid
        .unravel(bin)
        .iter()
        .zip(grid.sizes())
        .map(|(&j, &m)| Grid::signed_index(j, m))
        .sum();
    if parity.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn transform_components(grid: &Grid, n: usize, src: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let p = grid.len();
    let plans = plans(grid);
    let ffts = if inverse { &plans.inverse } else { &plans.forward };
    let phases: Vec<f64> = (0..p).map(|b| origin_phase(grid, b)).collect();
    let norm = if inverse { 1.0 } else { 1.0 / p as f64 };
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); p];
    for i in 0..n {
        for (pt, z) in buf.iter_mut().enumerate() {
            *z = src[pt * n + i];
            if inverse {
                *z *= phases[pt];
            }
        }
        fft_nd(&mut buf, grid.sizes(), ffts);
        for (pt, z) in buf.iter().enumerate() {
            let mut v = *z * norm;
            if !inverse {
                v *= phases[pt];
            }
            out[pt * n + i] = v;
        }
    }
    out
}

/// Componentwise n-dimensional DFT, normalized by `1 / prod m_k`.
pub fn forward_transform(u: &GridFunction) -> Spectrum {
    let coeffs = transform_components(&u.grid, u.space.dim(), &u.values, false);
    Spectrum { grid: u.grid.clone(), space: u.space, coeffs }
}

/// Unnormalized inverse of [`forward_transform`].
pub fn inverse_transform(s: &Spectrum) -> GridFunction {
    let values = transform_components(&s.grid, s.space.dim(), &s.coeffs, true);
    GridFunction { grid: s.grid.clone(), space: s.space, values }
}

/// `prod_k (i xi_k)^{alpha_k}`, with the Nyquist bin zeroed on odd-order axes.
pub fn derivative_factor(grid: &Grid, bin: usize, alpha: &MultiIndex) -> Complex64 {
    let idx = grid.unravel(bin);
    let mut f = Complex64::new(1.0, 0.0);
    for (k, &a) in alpha.0.iter().enumerate() {
        if a == 0 {
            continue;
        }
        if a % 2 == 1 && idx[k] == grid.nyquist_bin(k) {
            return Complex64::new(0.0, 0.0);
        }
        let m = grid.sizes()[k];
        let xi = Grid::signed_index(idx[k], m) as f64 * std::f64::consts::PI / grid.extents()[k];
        f *= Complex64::new(0.0, xi).powu(a);
    }
    f
}

/// Apply `D^alpha` to a spectrum in place.
pub fn differentiate_spectrum(s: &mut Spectrum, alpha: &MultiIndex) {
    if alpha.is_zero() {
        return;
    }
    let grid = s.grid.clone();
    s.scale_bins(|bin| derivative_factor(&grid, bin, alpha));
}

/// `D^alpha u = F^{-1} (i xi)^alpha F u`.
pub fn spectral_derivative(u: &GridFunction, alpha: &MultiIndex) -> Result<GridFunction> {
    if alpha.dim() != u.grid.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("multi-index of length {}", u.grid.dim()),
            found: format!("{}", alpha.dim()),
        });
    }
    if alpha.is_zero() {
        return Ok(u.clone());
    }
    let mut s = forward_transform(u);
    differentiate_spectrum(&mut s, alpha);
    Ok(inverse_transform(&s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_maps_to_dc() {
        let g = Grid::new(vec![PI, 2.0], vec![8, 16]).unwrap();
        let u = GridFunction::separable(&g, ValueSpace::scalar(), |_| c(2.5), &[c(1.0)]).unwrap();
        let s = forward_transform(&u);
        assert!((s.at(0)[0] - c(2.5)).norm() < 1e-14);
        assert!(s.coeffs()[1..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn plane_wave_hits_one_bin() {
        let g = Grid::new(vec![PI, PI], vec![8, 8]).unwrap();
        let xi0 = [2.0, -3.0];
        let u = GridFunction::separable(
            &g,
            ValueSpace::scalar(),
            |x| Complex64::from_polar(1.0, xi0[0] * x[0] + xi0[1] * x[1]),
            &[c(1.0)],
        )
        .unwrap();
        let s = forward_transform(&u);
        let target = g.ravel(&[2, 8 - 3]);
        for (b, z) in s.coeffs().iter().enumerate() {
            let want = if b == target { 1.0 } else { 0.0 };
            assert!((z - c(want)).norm() < 1e-13, "bin {b}: {z}");
        }
    }

    #[test]
    fn second_derivative_of_sine() {
        let g = Grid::new(vec![PI], vec![64]).unwrap();
        let u = GridFunction::separable(&g, ValueSpace::scalar(), |x| c(x[0].sin()), &[c(1.0)]).unwrap();
        let d2 = spectral_derivative(&u, &MultiIndex(vec![2])).unwrap();
        let err = d2.values().iter().zip(u.values()).fold(0.0f64, |m, (a, b)| m.max((a + b).norm()));
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn odd_derivative_keeps_real_input_real() {
        let g = Grid::new(vec![1.0], vec![16]).unwrap();
        let u = GridFunction::from_fn(&g, ValueSpace::scalar(), |x, o| {
            o[0] = c(((x[0] * 7.3).sin() + 0.3 * x[0]).exp())
        })
        .unwrap();
        let d = spectral_derivative(&u, &MultiIndex(vec![1])).unwrap();
        assert!(d.values().iter().all(|z| z.im.abs() < 1e-10));
    }

    #[test]
    fn identity_derivative() {
        let g = Grid::new(vec![1.0], vec![8]).unwrap();
        let u = GridFunction::from_fn(&g, ValueSpace::new(2, 2.0).unwrap(), |x, o| {
            o[0] = c(x[0]);
            o[1] = Complex64::new(0.0, x[0] * x[0]);
        })
        .unwrap();
        assert_eq!(spectral_derivative(&u, &MultiIndex(vec![0])).unwrap(), u);
    }
}
