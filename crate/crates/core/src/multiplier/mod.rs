//! Operator-valued Fourier multipliers: symbols, their application through
//! the transform, frequency projections, dyadic cells and the Mikhlin check.

mod dyadic;
mod mikhlin;

pub use dyadic::{dyadic_partition, locate, piecewise_const_approx, DyadicCell, PiecewiseConstant};
pub use mikhlin::{mikhlin_certificate, MikhlinCertificate, MikhlinOptions};

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::elliptic::PrincipalPart;
use crate::error::{Error, Result};
use crate::function_space::{derivative_factor, forward_transform, inverse_transform, Grid, GridFunction, MultiIndex};
use crate::operator::{OpValue, PositiveOperator};

/// A map from frequencies `xi` to operators on the value space.
pub trait OperatorSymbol: Send + Sync {
    fn eval(&self, xi: &[f64]) -> Result<OpValue>;

    /// Value used for DFT bin `bin` of `grid`; defaults to [`eval`](Self::eval)
    /// at the bin's frequency.
    fn eval_bin(&self, grid: &Grid, bin: usize) -> Result<OpValue> {
        self.eval(&bin_frequency(grid, bin))
    }
}

impl<S: OperatorSymbol + ?Sized> OperatorSymbol for Arc<S> {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        (**self).eval(xi)
    }
    fn eval_bin(&self, grid: &Grid, bin: usize) -> Result<OpValue> {
        (**self).eval_bin(grid, bin)
    }
}

impl<S: OperatorSymbol + ?Sized> OperatorSymbol for &S {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        (**self).eval(xi)
    }
    fn eval_bin(&self, grid: &Grid, bin: usize) -> Result<OpValue> {
        (**self).eval_bin(grid, bin)
    }
}

/// Frequency vector of a DFT bin.
pub fn bin_frequency(grid: &Grid, bin: usize) -> Vec<f64> {
    grid.unravel(bin)
        .iter()
        .enumerate()
        .map(|(k, &j)| Grid::signed_index(j, grid.sizes()[k]) as f64 * std::f64::consts::PI / grid.extents()[k])
        .collect()
}

fn euclid(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scalar(z: Complex64) -> Result<OpValue> {
    Ok(OpValue::Scalar(z))
}

pub struct Identity;

impl OperatorSymbol for Identity {
    fn eval(&self, _: &[f64]) -> Result<OpValue> {
        Ok(OpValue::identity())
    }
}

/// `-i sign(xi_axis)`, zero on the hyperplane `xi_axis = 0`.
pub struct HilbertSign {
    pub axis: usize,
}

impl OperatorSymbol for HilbertSign {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        let s = xi[self.axis];
        scalar(Complex64::new(0.0, if s > 0.0 { -1.0 } else if s < 0.0 { 1.0 } else { 0.0 }))
    }
}

/// `xi_axis / (1 + |xi|)`.
pub struct RieszLike {
    pub axis: usize,
}

impl OperatorSymbol for RieszLike {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        scalar(Complex64::new(xi[self.axis] / (1.0 + euclid(xi)), 0.0))
    }
}

/// `(i xi)^alpha`; on the lattice it matches spectral differentiation exactly,
/// including the Nyquist convention.
pub struct Power {
    pub alpha: MultiIndex,
}

impl OperatorSymbol for Power {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        let mut f = Complex64::new(1.0, 0.0);
        for (x, &a) in xi.iter().zip(&self.alpha.0) {
            f *= Complex64::new(0.0, *x).powu(a);
        }
        scalar(f)
    }

    fn eval_bin(&self, grid: &Grid, bin: usize) -> Result<OpValue> {
        scalar(derivative_factor(grid, bin, &self.alpha))
    }
}

/// `log|xi|`, zero at the origin. Unbounded, so it fails the Mikhlin check.
pub struct LogAbs;

impl OperatorSymbol for LogAbs {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        let r = euclid(xi);
        scalar(Complex64::new(if r == 0.0 { 0.0 } else { r.ln() }, 0.0))
    }
}

/// `(A + K(xi) + lambda)^{-1}`.
pub struct Resolvent {
    pub a: PositiveOperator,
    pub principal: PrincipalPart,
    pub lambda: Complex64,
}

impl OperatorSymbol for Resolvent {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        self.a.resolvent(self.principal.eval(xi) + self.lambda)
    }
}

/// `lambda (A + K(xi) + lambda)^{-1}`.
pub struct ParabolicPhi {
    pub a: PositiveOperator,
    pub principal: PrincipalPart,
    pub lambda: Complex64,
}

impl OperatorSymbol for ParabolicPhi {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        Ok(self.a.resolvent(self.principal.eval(xi) + self.lambda)?.scale(self.lambda))
    }
}

/// `M_1(xi) M_2(xi)`.
pub struct Product<A, B>(pub A, pub B);

impl<A: OperatorSymbol, B: OperatorSymbol> OperatorSymbol for Product<A, B> {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        Ok(self.0.eval(xi)?.compose(&self.1.eval(xi)?))
    }
    fn eval_bin(&self, grid: &Grid, bin: usize) -> Result<OpValue> {
        Ok(self.0.eval_bin(grid, bin)?.compose(&self.1.eval_bin(grid, bin)?))
    }
}

/// Symbol given by a closure.
pub struct FnSymbol<F>(pub F);

impl<F: Fn(&[f64]) -> Result<OpValue> + Send + Sync> OperatorSymbol for FnSymbol<F> {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        (self.0)(xi)
    }
}

/// Indicator of `{xi : lower_k < xi_k < upper_k}`; a missing side is unbounded.
pub struct BoxIndicator {
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl OperatorSymbol for BoxIndicator {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        let above = self.lower.as_ref().is_none_or(|a| xi.iter().zip(a).all(|(x, a)| x > a));
        let below = self.upper.as_ref().is_none_or(|b| xi.iter().zip(b).all(|(x, b)| x < b));
        scalar(Complex64::new(if above && below { 1.0 } else { 0.0 }, 0.0))
    }
}

/// Indicator of the half-space `xi_axis > 0`.
pub struct HalfSpace {
    pub axis: usize,
}

impl OperatorSymbol for HalfSpace {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        scalar(Complex64::new(if xi[self.axis] > 0.0 { 1.0 } else { 0.0 }, 0.0))
    }
}

fn wrap(err: Error, xi: Vec<f64>) -> Error {
    match err {
        e @ Error::SymbolEvaluation { .. } => e,
        other => Error::SymbolEvaluation { xi, reason: other.to_string() },
    }
}

/// Values of a symbol on every bin of a grid, computed once.
pub struct SymbolTable {
    grid: Grid,
    values: Vec<OpValue>,
}

impl SymbolTable {
    pub fn new(symbol: &dyn OperatorSymbol, grid: &Grid) -> Result<Self> {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|bin| {
                let v = symbol.eval_bin(grid, bin).map_err(|e| wrap(e, bin_frequency(grid, bin)))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::SymbolEvaluation { xi: bin_frequency(grid, bin), reason: "non-finite value".into() })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SymbolTable { grid: grid.clone(), values })
    }

    pub fn values(&self) -> &[OpValue] {
        &self.values
    }

    /// `sup_xi ||M(xi)||` over the lattice.
    pub fn sup_norm(&self, q: f64) -> f64 {
        self.values.iter().map(|v| v.opnorm(q)).fold(0.0, f64::max)
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        if u.grid() != &self.grid {
            return Err(Error::ShapeMismatch {
                expected: format!("grid {:?}", self.grid.sizes()),
                found: format!("{:?}", u.grid().sizes()),
            });
        }
        let n = u.space().dim();
        let mut s = forward_transform(u);
        s.coeffs_mut().par_chunks_mut(n).zip(self.values.par_iter()).for_each(|(c, m)| {
            let v = m.apply(c);
            c.copy_from_slice(&v);
        });
        Ok(inverse_transform(&s))
    }
}

/// `F^{-1} M(xi) F u`.
pub fn apply_symbol(symbol: &dyn OperatorSymbol, u: &GridFunction) -> Result<GridFunction> {
    SymbolTable::new(symbol, u.grid())?.apply(u)
}

/// Projection onto frequencies in the open positive orthant, applied as the
/// composition of one-dimensional half-space projections.
pub fn riesz_projection(u: &GridFunction) -> Result<GridFunction> {
    let mut out = u.clone();
    for axis in 0..u.grid().dim() {
        out = apply_symbol(&HalfSpace { axis }, &out)?;
    }
    Ok(out)
}

/// `Phi_a`: keeps frequencies with `xi_k > a_k` for all `k`.
pub fn lower_projection(a: &[f64], u: &GridFunction) -> Result<GridFunction> {
    apply_symbol(&BoxIndicator { lower: Some(a.to_vec()), upper: None }, u)
}

/// `Phi_b`: keeps frequencies with `xi_k < b_k` for all `k`.
pub fn upper_projection(b: &[f64], u: &GridFunction) -> Result<GridFunction> {
    apply_symbol(&BoxIndicator { lower: None, upper: Some(b.to_vec()) }, u)
}

/// `Phi_{a,b}`: keeps frequencies in the open box `prod (a_k, b_k)`; an empty
/// box yields zero.
pub fn char_projection(a: &[f64], b: &[f64], u: &GridFunction) -> Result<GridFunction> {
    let n = u.grid().dim();
    if a.len() != n || b.len() != n {
        return Err(Error::ShapeMismatch { expected: format!("{n}-dimensional corners"), found: format!("{}, {}", a.len(), b.len()) });
    }
    apply_symbol(&BoxIndicator { lower: Some(a.to_vec()), upper: Some(b.to_vec()) }, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::{spectral_derivative, ValueSpace};
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn wave(g: &Grid, xi: &[f64]) -> GridFunction {
        let xi = xi.to_vec();
        GridFunction::from_fn(g, ValueSpace::scalar(), move |x, o| {
            o[0] = Complex64::from_polar(1.0, x.iter().zip(&xi).map(|(a, b)| a * b).sum())
        })
        .unwrap()
    }

    #[test]
    fn hilbert_of_cosine_is_sine() {
        let g = Grid::new(vec![PI], vec![64]).unwrap();
        let u = GridFunction::separable(&g, ValueSpace::scalar(), |x| c(x[0].cos()), &[c(1.0)]).unwrap();
        let h = apply_symbol(&HilbertSign { axis: 0 }, &u).unwrap();
        for (p, x) in g.axis_points(0).iter().enumerate() {
            assert!((h.values()[p] - c(x.sin())).norm() < 1e-9);
        }
    }

    #[test]
    fn power_symbol_is_spectral_derivative() {
        let g = Grid::new(vec![1.0, 2.0], vec![8, 16]).unwrap();
        let u = GridFunction::from_fn(&g, ValueSpace::scalar(), |x, o| o[0] = c((x[0] * 3.0 + x[1]).sin().exp())).unwrap();
        let alpha = MultiIndex(vec![1, 2]);
        let a = apply_symbol(&Power { alpha: alpha.clone() }, &u).unwrap();
        let b = spectral_derivative(&u, &alpha).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn riesz_projection_keeps_or_kills_waves() {
        let g = Grid::cube(2, PI, 8).unwrap();
        let pos = wave(&g, &[1.0, 2.0]);
        assert!(riesz_projection(&pos).unwrap().rel_diff(&pos) < 1e-12);
        let neg = wave(&g, &[1.0, -2.0]);
        assert!(riesz_projection(&neg).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn box_factorizes_and_empty_box_is_zero() {
        let g = Grid::cube(2, PI, 8).unwrap();
        let u = GridFunction::from_fn(&g, ValueSpace::scalar(), |x, o| o[0] = c((x[0] - 0.3 * x[1]).cos() + x[1].sin())).unwrap();
        let (a, b) = ([-1.5, -0.5], [2.0, 3.5]);
        let direct = char_projection(&a, &b, &u).unwrap();
        let composed = lower_projection(&a, &upper_projection(&b, &u).unwrap()).unwrap();
        assert!(direct.rel_diff(&composed) < 1e-12);
        assert_eq!(char_projection(&[1.0, 1.0], &[0.0, 2.0], &u).unwrap().max_abs(), 0.0);
        let all = char_projection(&[-100.0; 2], &[100.0; 2], &u).unwrap();
        assert!(all.rel_diff(&u) < 1e-12);
    }

    #[test]
    fn failing_symbol_reports_frequency() {
        let g = Grid::new(vec![PI], vec![8]).unwrap();
        let u = wave(&g, &[1.0]);
        let bad = FnSymbol(|xi: &[f64]| {
            if xi[0] == 2.0 {
                Err(Error::Singular { at: "test".into() })
            } else {
                Ok(OpValue::identity())
            }
        });
        match apply_symbol(&bad, &u) {
            Err(Error::SymbolEvaluation { xi, .. }) => assert_eq!(xi, vec![2.0]),
            other => panic!("{other:?}"),
        }
    }
}
