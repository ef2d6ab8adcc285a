use super::grid::Grid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    One,
    /// `prod_k |x_k|^{a_k}`.
    AxisPower(Vec<f64>),
    Tabulated,
}

/// A positive weight sampled on a grid.
///
/// Analytic weights are sampled half a cell to the right of each grid point,
/// so a power singularity at the origin is never hit.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    kind: WeightKind,
    grid: Grid,
    values: Vec<f64>,
}

impl Weight {
    pub fn one(grid: &Grid) -> Self {
        Weight { kind: WeightKind::One, grid: grid.clone(), values: vec![1.0; grid.len()] }
    }

    pub fn axis_power(grid: &Grid, exponents: Vec<f64>) -> Result<Self> {
        if exponents.len() != grid.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} exponents", grid.dim()),
                found: format!("{}", exponents.len()),
            });
        }
        if exponents.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("weight exponents must be finite".into()));
        }
        let mids: Vec<Vec<f64>> = (0..grid.dim()).map(|k| grid.axis_midpoints(k)).collect();
        let values = (0..grid.len())
            .map(|p| {
                grid.unravel(p)
                    .iter()
                    .enumerate()
                    .map(|(k, &j)| mids[k][j].abs().powf(exponents[k]))
                    .product()
            })
            .collect();
        let w = Weight { kind: WeightKind::AxisPower(exponents), grid: grid.clone(), values };
        w.check()?;
        Ok(w)
    }

    pub fn tabulated(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} weight values", grid.len()),
                found: format!("{}", values.len()),
            });
        }
        let w = Weight { kind: WeightKind::Tabulated, grid: grid.clone(), values };
        w.check()?;
        Ok(w)
    }

    /// Tabulate `f` at the half-offset sample points.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mids: Vec<Vec<f64>> = (0..grid.dim()).map(|k| grid.axis_midpoints(k)).collect();
        let values = (0..grid.len())
            .map(|p| {
                let x: Vec<f64> = grid.unravel(p).iter().enumerate().map(|(k, &j)| mids[k][j]).collect();
                f(&x)
            })
            .collect();
        Weight::tabulated(grid, values)
    }

    fn check(&self) -> Result<()> {
        match self.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            Some(v) => Err(Error::InvalidInput(format!("weight values must be positive and finite, found {v}"))),
            None => Ok(()),
        }
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_one(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_weight_avoids_origin() {
        let g = Grid::new(vec![1.0], vec![8]).unwrap();
        let w = Weight::axis_power(&g, vec![-0.5]).unwrap();
        assert!(w.values().iter().all(|v| v.is_finite() && *v > 0.0));
        assert!((w.values()[4] - 0.125f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive() {
        let g = Grid::new(vec![1.0], vec![4]).unwrap();
        assert!(Weight::tabulated(&g, vec![1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(Weight::tabulated(&g, vec![1.0; 3]).is_err());
    }
}
