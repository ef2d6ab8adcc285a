use num_complex::Complex64;
use rayon::prelude::*;

use super::OperatorSymbol;
use crate::error::{Error, Result};
use crate::function_space::{MultiIndex, ValueSpace};
use crate::operator::{r_bound_estimate, OpValue, RBoundOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MikhlinOptions {
    /// Evaluation moduli are `2^e` for `e` from `min_exp` to `max_exp` in `exp_step`.
    pub min_exp: f64,
    pub max_exp: f64,
    pub exp_step: f64,
    /// Central-difference step relative to `|xi_k|`.
    pub rel_step: f64,
    /// Use `|xi|^{|beta|}` instead of `xi^beta`.
    pub abs_power: bool,
    /// Re-run on the doubled exponent range and flag constants that keep growing.
    pub growth_check: bool,
    pub growth_tolerance: f64,
    /// Values above this count as blow-up.
    pub overflow: f64,
    pub rbound: RBoundOptions,
}

impl Default for MikhlinOptions {
    fn default() -> Self {
        MikhlinOptions {
            min_exp: -8.0,
            max_exp: 8.0,
            exp_step: 0.5,
            rel_step: 1e-4,
            abs_power: false,
            growth_check: true,
            growth_tolerance: 0.1,
            overflow: 1e12,
            rbound: RBoundOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MikhlinCertificate {
    /// `(beta, C_beta)` for every `beta` in `{0,1}^n`.
    pub constants: Vec<(MultiIndex, f64)>,
    /// `sum_beta C_beta` (infinite when unbounded).
    pub total: f64,
    pub bounded: bool,
    pub reason: Option<String>,
}

fn axis_values(opts: &MikhlinOptions, scale: f64) -> Vec<f64> {
    let (lo, hi) = (opts.min_exp * scale, opts.max_exp * scale);
    let count = ((hi - lo) / opts.exp_step).round() as usize;
    let mut out = Vec::with_capacity(2 * count + 2);
    for k in 0..=count {
        let r = (lo + k as f64 * opts.exp_step).exp2();
        out.push(-r);
        out.push(r);
    }
    out
}

/// `xi^beta D^beta M(xi)` by central differences in the `beta` directions.
fn weighted_derivative(m: &dyn OperatorSymbol, xi: &[f64], beta: &MultiIndex, opts: &MikhlinOptions, n: usize) -> Result<OpValue> {
    let dirs: Vec<usize> = (0..xi.len()).filter(|&k| beta.0[k] == 1).collect();
    if dirs.is_empty() {
        return m.eval(xi);
    }
    let steps: Vec<f64> = dirs.iter().map(|&k| opts.rel_step * xi[k].abs()).collect();
    let mut acc: Option<OpValue> = None;
    for mask in 0..1usize << dirs.len() {
        let mut p = xi.to_vec();
        let mut sign = 1.0;
        for (t, &k) in dirs.iter().enumerate() {
            if mask >> t & 1 == 1 {
                p[k] += steps[t];
            } else {
                p[k] -= steps[t];
                sign = -sign;
            }
        }
        let v = m.eval(&p)?.scale(Complex64::new(sign, 0.0));
        acc = Some(match acc {
            None => v,
            Some(a) => a.add(&v, n),
        });
    }
    let denom: f64 = steps.iter().map(|h| 2.0 * h).product();
    let weight = if opts.abs_power {
        xi.iter().map(|x| x * x).sum::<f64>().sqrt().powi(dirs.len() as i32)
    } else {
        dirs.iter().map(|&k| xi[k]).product()
    };
    Ok(acc.expect("at least one stencil point").scale(Complex64::new(weight / denom, 0.0)))
}

fn constants(m: &dyn OperatorSymbol, dim: usize, space: ValueSpace, opts: &MikhlinOptions, scale: f64) -> Result<Vec<(MultiIndex, f64)>> {
    let axis = axis_values(opts, scale);
    let count = axis.len().pow(dim as u32);
    let points: Vec<Vec<f64>> = (0..count)
        .map(|mut f| {
            let mut xi = vec![0.0; dim];
            for k in (0..dim).rev() {
                xi[k] = axis[f % axis.len()];
                f /= axis.len();
            }
            xi
        })
        .collect();
    let mut out = Vec::new();
    for beta in MultiIndex::binary(dim) {
        let family = points
            .par_iter()
            .map(|xi| weighted_derivative(m, xi, &beta, opts, space.dim()))
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = family.iter().position(|v| !v.is_finite() || v.opnorm(space.q()) > opts.overflow) {
            return Err(Error::SymbolEvaluation {
                xi: points[bad].clone(),
                reason: format!("derivative of order {:?} overflows", beta.0),
            });
        }
        let c = r_bound_estimate(&family, space, &opts.rbound)?.bound;
        out.push((beta, c));
    }
    Ok(out)
}

/// Estimated constants `C_beta = R{xi^beta D^beta M(xi)}` on a log-spaced grid.
///
/// The certificate is a falsifier: blow-up, or constants that still grow
/// when the frequency range is doubled, mark the symbol as unbounded.
pub fn mikhlin_certificate(m: &dyn OperatorSymbol, dim: usize, space: ValueSpace, opts: &MikhlinOptions) -> Result<MikhlinCertificate> {
    if dim == 0 || dim > 3 {
        return Err(Error::InvalidInput(format!("dimension must be 1..=3, got {dim}")));
    }
    if !(opts.exp_step > 0.0 && opts.max_exp > opts.min_exp && opts.rel_step > 0.0) {
        return Err(Error::InvalidInput("invalid Mikhlin evaluation grid".into()));
    }
    let unbounded = |constants: Vec<(MultiIndex, f64)>, reason: String| MikhlinCertificate {
        constants,
        total: f64::INFINITY,
        bounded: false,
        reason: Some(reason),
    };
    let base = match constants(m, dim, space, opts, 1.0) {
        Ok(c) => c,
        Err(Error::SymbolEvaluation { xi, reason }) => return Ok(unbounded(Vec::new(), format!("{reason} at xi={xi:?}"))),
        Err(e) => return Err(e),
    };
    if opts.growth_check {
        let wide = match constants(m, dim, space, opts, 2.0) {
            Ok(c) => c,
            Err(Error::SymbolEvaluation { xi, reason }) => {
                return Ok(unbounded(base, format!("{reason} at xi={xi:?} on the doubled range")))
            }
            Err(e) => return Err(e),
        };
        for ((beta, c0), (_, c1)) in base.iter().zip(&wide) {
            if *c1 > (1.0 + opts.growth_tolerance) * c0 + 1e-12 {
                let reason = format!("C_{:?} grows from {c0:e} to {c1:e} when the range doubles", beta.0);
                return Ok(unbounded(base, reason));
            }
        }
    }
    let total = base.iter().map(|(_, c)| c).sum();
    Ok(MikhlinCertificate { constants: base, total, bounded: true, reason: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::{Identity, LogAbs, RieszLike};

    fn fast() -> MikhlinOptions {
        MikhlinOptions { rbound: RBoundOptions { vector_draws: 200, trials: 128, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn identity_certificate() {
        let c = mikhlin_certificate(&Identity, 2, ValueSpace::new(3, 2.0).unwrap(), &fast()).unwrap();
        assert!(c.bounded);
        assert_eq!(c.constants[0].1, 1.0);
        assert!(c.constants[1..].iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn riesz_like_certificate() {
        let c = mikhlin_certificate(&RieszLike { axis: 0 }, 1, ValueSpace::scalar(), &fast()).unwrap();
        assert!(c.bounded);
        assert!((c.constants[0].1 - 256.0 / 257.0).abs() < 1e-12);
        assert!((c.constants[1].1 - 0.25).abs() < 1e-7);
        assert!((c.total - 1.246108949416).abs() < 1e-7);
    }

    #[test]
    fn log_symbol_fails() {
        let c = mikhlin_certificate(&LogAbs, 1, ValueSpace::scalar(), &fast()).unwrap();
        assert!(!c.bounded);
        assert!(c.total.is_infinite());
    }
}
