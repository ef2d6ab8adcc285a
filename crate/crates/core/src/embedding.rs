//! The embedding symbol `Psi_h` and the interpolation-type estimates it controls.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::function_space::{graph_norm, sobolev_lions_norm, spectral_derivative, weighted_lp_norm, Anisotropy, GridFunction, MultiIndex, Weight};
use crate::multiplier::OperatorSymbol;
use crate::operator::{OpValue, PositiveOperator};
use crate::report::EstimateReport;

/// Data of one embedding estimate for `D^alpha` from `W^l_{p,gamma}(E(A), E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCase {
    pub l: Anisotropy,
    pub alpha: MultiIndex,
    pub mu: f64,
    pub h: f64,
    pub a: PositiveOperator,
    pub p: f64,
    pub gamma: Weight,
}

impl EmbeddingCase {
    /// `kappa = |alpha : l|`.
    pub fn kappa(&self) -> f64 {
        self.l.kappa(&self.alpha)
    }

    /// Rejects `kappa > 1`, `mu` outside `[0, 1 - kappa]` and `h <= 0`.
    pub fn validate(&self) -> Result<()> {
        if self.l.dim() != self.alpha.dim() {
            return Err(Error::ShapeMismatch { expected: format!("alpha of length {}", self.l.dim()), found: format!("{}", self.alpha.dim()) });
        }
        let kappa = self.kappa();
        if kappa > 1.0 {
            return Err(Error::InvalidInput(format!("|alpha : l| = {kappa} exceeds 1")));
        }
        if !(self.mu >= 0.0 && self.mu <= 1.0 - kappa + 1e-15) {
            return Err(Error::InvalidInput(format!("mu = {} must lie in [0, 1 - kappa] = [0, {}]", self.mu, 1.0 - kappa)));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidInput(format!("h must be > 0, got {}", self.h)));
        }
        Ok(())
    }

    /// Exponent `1 - kappa - mu` of `A` on the left-hand side (clamped at 0).
    pub fn theta(&self) -> f64 {
        (1.0 - self.kappa() - self.mu).max(0.0)
    }
}

/// `Psi_h(xi) = |xi|^alpha A^{1-kappa-mu} h^{-mu} (A + sum |xi_k|^{l_k} + 1/h)^{-1}`
/// with `|xi|^alpha = prod |xi_k|^{alpha_k}`.
pub struct PsiH {
    a: PositiveOperator,
    l: Vec<u32>,
    alpha: Vec<u32>,
    theta: f64,
    mu: f64,
    h: f64,
}

pub fn psi_h_symbol(case: &EmbeddingCase) -> Result<PsiH> {
    case.validate()?;
    Ok(PsiH {
        a: case.a.clone(),
        l: case.l.orders().to_vec(),
        alpha: case.alpha.0.clone(),
        theta: case.theta(),
        mu: case.mu,
        h: case.h,
    })
}

impl OperatorSymbol for PsiH {
    fn eval(&self, xi: &[f64]) -> Result<OpValue> {
        let mono: f64 = xi.iter().zip(&self.alpha).map(|(x, &a)| x.abs().powi(a as i32)).product();
        if mono == 0.0 {
            return Ok(OpValue::zero());
        }
        let shift: f64 = xi.iter().zip(&self.l).map(|(x, &l)| x.abs().powi(l as i32)).sum::<f64>() + 1.0 / self.h;
        let scale = mono * self.h.powf(-self.mu);
        let theta = self.theta;
        Ok(self.a.func(|d| Complex64::new(scale * d.powf(theta) / (d + shift), 0.0)))
    }
}

/// The three norms entering the estimate for one function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingNorms {
    /// `||D^alpha u||_{L_{p,gamma}(E(A^{1-kappa-mu}))}`.
    pub lhs: f64,
    /// `||u||_{W^l_{p,gamma}(E(A), E)}`.
    pub y: f64,
    /// `||u||_{L_{p,gamma}(E)}`.
    pub x: f64,
}

pub fn embedding_norms(u: &GridFunction, case: &EmbeddingCase) -> Result<EmbeddingNorms> {
    case.validate()?;
    let d = spectral_derivative(u, &case.alpha)?;
    Ok(EmbeddingNorms {
        lhs: graph_norm(&d, &case.a, case.theta(), case.p, &case.gamma)?,
        y: sobolev_lions_norm(u, &case.l, &case.a, case.p, &case.gamma)?,
        x: weighted_lp_norm(u, case.p, &case.gamma)?,
    })
}

/// `LHS / (h^mu ||u||_Y + h^{-(1-mu)} ||u||_X)` for every `h` in the sweep.
///
/// Rows carry `(mu, h)`. A zero function is skipped.
pub fn embedding_inequality_report(u: &GridFunction, case: &EmbeddingCase, h_sweep: &[f64]) -> Result<EstimateReport> {
    let mut report = EstimateReport::new(&["mu", "h"]);
    let nrm = embedding_norms(u, case)?;
    if nrm.x == 0.0 {
        report.skipped += h_sweep.len();
        return Ok(report);
    }
    for &h in h_sweep {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!("h must be > 0, got {h}")));
        }
        let rhs = h.powf(case.mu) * nrm.y + h.powf(-(1.0 - case.mu)) * nrm.x;
        report.push(vec![case.mu, h], nrm.lhs, rhs);
    }
    Ok(report)
}

/// Result of the multiplicative form of the estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativeReport {
    pub report: EstimateReport,
    /// `h* = ||u||_X / ||u||_Y`, the balancing step.
    pub h_star: f64,
    /// `h*` exceeds the admissible `h_0`.
    pub beyond_h0: bool,
}

/// `LHS / (||u||_Y^{1-mu} ||u||_X^mu)`; one row with `(mu, h*)`.
pub fn multiplicative_estimate_report(u: &GridFunction, case: &EmbeddingCase, h0: f64) -> Result<MultiplicativeReport> {
    let nrm = embedding_norms(u, case)?;
    if nrm.y == 0.0 {
        return Err(Error::InvalidInput("multiplicative estimate needs ||u||_Y > 0".into()));
    }
    let h_star = nrm.x / nrm.y;
    let mut report = EstimateReport::new(&["mu", "h"]);
    report.push(vec![case.mu, h_star], nrm.lhs, nrm.y.powf(1.0 - case.mu) * nrm.x.powf(case.mu));
    Ok(MultiplicativeReport { report, h_star, beyond_h0: h_star > h0 })
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_sweep(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}
