use std::collections::BTreeSet;

use num_complex::Complex64;

use super::{bin_frequency, OperatorSymbol};
use crate::error::Result;
use crate::function_space::Grid;
use crate::operator::OpValue;

/// Sub-cell `prod_k [2^{j_k} + r_k 2^{j_k - k}, 2^{j_k} + (r_k + 1) 2^{j_k - k})`
/// of the dyadic interval `prod_k [2^{j_k}, 2^{j_k + 1})` at refinement level `k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicCell {
    pub j: Vec<i32>,
    pub level: u32,
    pub r: Vec<u32>,
}

impl DyadicCell {
    pub fn lower(&self) -> Vec<f64> {
        self.j
            .iter()
            .zip(&self.r)
            .map(|(&j, &r)| (j as f64).exp2() + r as f64 * ((j - self.level as i32) as f64).exp2())
            .collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.lower().iter().zip(&self.j).map(|(lo, &j)| lo + ((j - self.level as i32) as f64).exp2()).collect()
    }

    /// Corner where the piecewise-constant approximation samples the symbol.
    pub fn anchor(&self) -> Vec<f64> {
        self.lower()
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        let (lo, hi) = (self.lower(), self.upper());
        xi.iter().zip(lo.iter().zip(&hi)).all(|(x, (a, b))| x >= a && x < b)
    }
}

/// Cell containing `xi` at refinement `level`; `None` unless every `xi_k > 0`.
pub fn locate(xi: &[f64], level: u32) -> Option<DyadicCell> {
    let mut j = Vec::with_capacity(xi.len());
    let mut r = Vec::with_capacity(xi.len());
    for &x in xi {
        if !(x > 0.0 && x.is_finite()) {
            return None;
        }
        let mut e = x.log2().floor() as i32;
        while (e as f64).exp2() > x {
            e -= 1;
        }
        while ((e + 1) as f64).exp2() <= x {
            e += 1;
        }
        let width = ((e - level as i32) as f64).exp2();
        let sub = (((x - (e as f64).exp2()) / width).floor() as i64).clamp(0, (1i64 << level) - 1);
        j.push(e);
        r.push(sub as u32);
    }
    Some(DyadicCell { j, level, r })
}

/// All cells at `level` that contain a strictly positive lattice frequency.
pub fn dyadic_partition(grid: &Grid, level: u32) -> Vec<DyadicCell> {
    let cells: BTreeSet<DyadicCell> = (0..grid.len()).filter_map(|b| locate(&bin_frequency(grid, b), level)).collect();
    cells.into_iter().collect()
}

/// `M` frozen at the anchor of each dyadic cell.
///
/// Other orthants are handled by reflection: the cell of `|xi|` is used and the
/// signs of `xi` are restored on the anchor. Coordinates equal to zero stay zero.
pub struct PiecewiseConstant<S> {
    pub inner: S,
    pub level: u32,
}

pub fn piecewise_const_approx<S: OperatorSymbol>(inner: S, level: u32) -> PiecewiseConstant<S> {
    PiecewiseConstant { inner, level }
}

impl<S: OperatorSymbol> PiecewiseConstant<S> {
    pub fn anchor_of(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter()
            .map(|&x| {
                if x == 0.0 {
                    0.0
                } else {
                    let cell = locate(&[x.abs()], self.level).expect("nonzero coordinate");
                    x.signum() * cell.anchor()[0]
                }
            })
            .collect()
    }
}

impl<S: OperatorSymbol> OperatorSymbol for PiecewiseConstant<S> {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        if xi.iter().any(|x| !x.is_finite()) {
            return Ok(OpValue::Scalar(Complex64::new(f64::NAN, 0.0)));
        }
        self.inner.eval(&self.anchor_of(xi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::FnSymbol;
    use std::f64::consts::PI;

    #[test]
    fn locate_examples() {
        let c = locate(&[3.0], 0).unwrap();
        assert_eq!((c.j.clone(), c.r.clone()), (vec![1], vec![0]));
        assert_eq!(c.lower(), vec![2.0]);
        assert_eq!(c.upper(), vec![4.0]);
        let c = locate(&[3.0], 1).unwrap();
        assert_eq!(c.r, vec![1]);
        assert_eq!(c.lower(), vec![3.0]);
        assert!(locate(&[1.0, 0.0], 0).is_none());
        assert_eq!(locate(&[1.0], 5).unwrap().anchor(), vec![1.0]);
    }

    #[test]
    fn positive_lattice_covered_once() {
        let g = Grid::new(vec![PI, 2.0], vec![32, 16]).unwrap();
        for level in 0..3 {
            let cells = dyadic_partition(&g, level);
            let mut covered = 0;
            for b in 0..g.len() {
                let xi = bin_frequency(&g, b);
                let hits = cells.iter().filter(|c| c.contains(&xi)).count();
                if xi.iter().all(|&x| x > 0.0) {
                    assert_eq!(hits, 1);
                    covered += 1;
                } else {
                    assert_eq!(hits, 0);
                }
            }
            assert_eq!(covered, 15 * 7);
        }
    }

    #[test]
    fn refinement_reduces_error() {
        let m = FnSymbol(|xi: &[f64]| Ok(OpValue::Scalar(Complex64::new(1.0 / (1.0 + xi[0]), 0.0))));
        let g = Grid::new(vec![PI / 4.0], vec![256]).unwrap();
        let err = |level| {
            let a = piecewise_const_approx(&m, level);
            (0..g.len())
                .map(|b| bin_frequency(&g, b))
                .filter(|xi| xi[0] > 0.0)
                .map(|xi| match (a.eval(&xi).unwrap(), m.eval(&xi).unwrap()) {
                    (OpValue::Scalar(x), OpValue::Scalar(y)) => (x - y).norm(),
                    _ => unreachable!(),
                })
                .fold(0.0f64, f64::max)
        };
        assert!(err(6) <= err(3));
        assert!(err(3) > 0.0);
    }
}
