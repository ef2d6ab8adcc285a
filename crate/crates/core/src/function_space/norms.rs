use super::grid::{Anisotropy, MultiIndex};
use super::transform::{spectral_derivative, GridFunction};
use super::weight::Weight;
use crate::error::{Error, Result};
use crate::operator::PositiveOperator;

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidInput(format!("exponent must lie in (1, inf), got {p}")));
    }
    Ok(())
}

/// `(sum_x ||u(x)||_{l_q}^p gamma(x) dV)^{1/p}`.
pub fn weighted_lp_norm(u: &GridFunction, p: f64, gamma: &Weight) -> Result<f64> {
    check_exponent(p)?;
    if gamma.grid() != u.grid() {
        return Err(Error::ShapeMismatch {
            expected: format!("weight on grid {:?}", u.grid().sizes()),
            found: format!("{:?}", gamma.grid().sizes()),
        });
    }
    let space = u.space();
    let pointwise: Vec<f64> = (0..u.grid().len()).map(|x| space.norm(u.at(x))).collect();
    let top = pointwise.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = pointwise.iter().zip(gamma.values()).map(|(&r, &w)| (r / top).powf(p) * w).sum();
    Ok(top * (sum * u.grid().cell_volume()).powf(1.0 / p))
}

/// Norm in `L_{p,gamma}(E(A^theta))`: `(||u||^p + ||A^theta u||^p)^{1/p}`.
pub fn graph_norm(u: &GridFunction, a: &PositiveOperator, theta: f64, p: f64, gamma: &Weight) -> Result<f64> {
    let plain = weighted_lp_norm(u, p, gamma)?;
    let lifted = weighted_lp_norm(&a.apply_field(theta, u)?, p, gamma)?;
    let top = plain.max(lifted);
    if top == 0.0 {
        return Ok(0.0);
    }
    Ok(top * ((plain / top).powf(p) + (lifted / top).powf(p)).powf(1.0 / p))
}

/// `||u||_{L_{p,gamma}(E(A))} + sum_k ||d^{l_k} u / dx_k^{l_k}||_{L_{p,gamma}}`.
pub fn sobolev_lions_norm(u: &GridFunction, l: &Anisotropy, a: &PositiveOperator, p: f64, gamma: &Weight) -> Result<f64> {
    let n = u.grid().dim();
    if l.dim() != n {
        return Err(Error::ShapeMismatch { expected: format!("anisotropy of length {n}"), found: format!("{}", l.dim()) });
    }
    let mut total = graph_norm(u, a, 1.0, p, gamma)?;
    for (k, &lk) in l.orders().iter().enumerate() {
        total += weighted_lp_norm(&spectral_derivative(u, &MultiIndex::axis(n, k, lk))?, p, gamma)?;
    }
    Ok(total)
}

/// Snapshots `u(t_j)` at `t_j = j dt`, `j = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dt: f64,
    snapshots: Vec<GridFunction>,
}

impl TimeSeries {
    pub fn new(dt: f64, snapshots: Vec<GridFunction>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step must be > 0, got {dt}")));
        }
        if snapshots.is_empty() {
            return Err(Error::InvalidInput("time series needs at least one snapshot".into()));
        }
        for s in &snapshots[1..] {
            snapshots[0].check_compatible(s)?;
        }
        Ok(TimeSeries { dt, snapshots })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[GridFunction] {
        &self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<GridFunction> {
        self.snapshots
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|j| j as f64 * self.dt).collect()
    }

    /// Apply `f` to every snapshot.
    pub fn map(&self, f: impl Fn(&GridFunction) -> Result<GridFunction>) -> Result<TimeSeries> {
        TimeSeries::new(self.dt, self.snapshots.iter().map(f).collect::<Result<_>>()?)
    }

    pub fn mixed_norm(&self, p: f64, p1: f64, gamma: &Weight) -> Result<f64> {
        mixed_norm(&self.snapshots, p, p1, gamma, self.dt)
    }
}

/// `(int (int ||u||^p gamma dx)^{p1/p} dt)^{1/p1}`.
///
/// The time integral uses the composite trapezoid rule over the snapshots;
/// a lone snapshot counts as one cell of width `dt`.
pub fn mixed_norm(snapshots: &[GridFunction], p: f64, p1: f64, gamma: &Weight, dt: f64) -> Result<f64> {
    check_exponent(p1)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be > 0, got {dt}")));
    }
    let inner: Vec<f64> = snapshots.iter().map(|u| weighted_lp_norm(u, p, gamma)).collect::<Result<_>>()?;
    let top = inner.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        return Ok(0.0);
    }
    let w: Vec<f64> = inner.iter().map(|x| (x / top).powf(p1)).collect();
    let integral = match w.len() {
        1 => w[0] * dt,
        k => dt * (0.5 * (w[0] + w[k - 1]) + w[1..k - 1].iter().sum::<f64>()),
    };
    Ok(top * integral.powf(1.0 / p1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::{Grid, ValueSpace};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn unit_pointwise_norm() {
        let g = Grid::cube(2, PI, 16).unwrap();
        let sp = ValueSpace::new(2, 3.0).unwrap();
        let u = GridFunction::from_fn(&g, sp, |_, o| {
            o[0] = c(2f64.powf(-1.0 / 3.0));
            o[1] = Complex64::new(0.0, 2f64.powf(-1.0 / 3.0));
        })
        .unwrap();
        let v = weighted_lp_norm(&u, 1.5, &Weight::one(&g)).unwrap();
        assert!((v - (2.0 * PI).powf(2.0 / 1.5)).abs() < 1e-12);
    }

    #[test]
    fn cosine_l2() {
        let g = Grid::new(vec![PI], vec![64]).unwrap();
        let u = GridFunction::separable(&g, ValueSpace::scalar(), |x| c(x[0].cos()), &[c(1.0)]).unwrap();
        let v = weighted_lp_norm(&u, 2.0, &Weight::one(&g)).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-6);
        assert_eq!(weighted_lp_norm(&u.scale(c(0.0)), 2.0, &Weight::one(&g)).unwrap(), 0.0);
    }

    #[test]
    fn sobolev_lions_of_sine() {
        let g = Grid::new(vec![PI], vec![32]).unwrap();
        let u = GridFunction::separable(&g, ValueSpace::scalar(), |x| c(x[0].sin()), &[c(1.0)]).unwrap();
        let a = PositiveOperator::identity(ValueSpace::scalar());
        let w = Weight::one(&g);
        let v = sobolev_lions_norm(&u, &Anisotropy::new(vec![2]).unwrap(), &a, 2.0, &w).unwrap();
        // graph part sqrt(pi + pi), derivative part sqrt(pi)
        let want = (2.0 * PI).sqrt() + PI.sqrt();
        assert!((v - want).abs() < 1e-9, "{v} vs {want}");
    }

    #[test]
    fn mixed_norm_cases() {
        let g = Grid::new(vec![1.0], vec![8]).unwrap();
        let w = Weight::one(&g);
        let u = GridFunction::from_fn(&g, ValueSpace::scalar(), |x, o| o[0] = c(1.0 + x[0])).unwrap();
        let single = mixed_norm(std::slice::from_ref(&u), 2.0, 2.0, &w, 0.25).unwrap();
        assert!((single - 0.25f64.sqrt() * weighted_lp_norm(&u, 2.0, &w).unwrap()).abs() < 1e-14);
        let steady = vec![u.clone(); 11];
        let v = mixed_norm(&steady, 2.0, 2.0, &w, 0.1).unwrap();
        assert!((v - weighted_lp_norm(&u, 2.0, &w).unwrap()).abs() < 1e-10);
        let zeros = vec![u.scale(c(0.0)); 3];
        assert_eq!(mixed_norm(&zeros, 2.0, 3.0, &w, 0.1).unwrap(), 0.0);
    }
}
