//! Abstract elliptic equations `sum a_alpha D^alpha u + A u + lambda u + L_1 u = f`
//! with constant complex top-order coefficients, solved mode by mode.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{EllipticityViolation, Error, Result};
use crate::function_space::{
    derivative_factor, forward_transform, inverse_transform, spectral_derivative, weighted_lp_norm, Grid, GridFunction,
    MultiIndex, Weight,
};
use crate::multiplier::bin_frequency;
use crate::operator::{OpValue, PositiveOperator};
use crate::report::EstimateReport;

/// Top-order part `K(xi) = sum_{|alpha| = 2l} a_alpha (i xi)^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalPart {
    dim: usize,
    l: u32,
    terms: Vec<(MultiIndex, Complex64)>,
}

impl PrincipalPart {
    pub fn new(dim: usize, l: u32, terms: Vec<(MultiIndex, Complex64)>) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidInput("order parameter l must be >= 1".into()));
        }
        for (alpha, _) in &terms {
            if alpha.dim() != dim || alpha.order() != 2 * l {
                return Err(Error::InvalidInput(format!(
                    "coefficient index {:?} is not of order {} in dimension {dim}",
                    alpha.0,
                    2 * l
                )));
            }
        }
        if terms.iter().all(|(_, a)| *a == Complex64::new(0.0, 0.0)) {
            return Err(Error::Ellipticity(EllipticityViolation::Degenerate));
        }
        Ok(PrincipalPart { dim, l, terms })
    }

    /// `-Delta`, so that `K(xi) = |xi|^2`.
    pub fn laplacian(dim: usize) -> Self {
        let terms = (0..dim).map(|k| (MultiIndex::axis(dim, k, 2), Complex64::new(-1.0, 0.0))).collect();
        PrincipalPart { dim, l: 1, terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Half the top order.
    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn terms(&self) -> &[(MultiIndex, Complex64)] {
        &self.terms
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(alpha, a)| {
                let mut f = *a;
                for (x, &e) in xi.iter().zip(&alpha.0) {
                    f *= Complex64::new(0.0, *x).powu(e);
                }
                f
            })
            .sum()
    }

    /// `K` on a DFT bin, consistent with [`spectral_derivative`] at Nyquist.
    pub fn eval_bin(&self, grid: &Grid, bin: usize) -> Complex64 {
        self.terms.iter().map(|(alpha, a)| a * derivative_factor(grid, bin, alpha)).sum()
    }

    /// `sum a_alpha D^alpha u`.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        let mut s = forward_transform(u);
        let grid = u.grid().clone();
        s.scale_bins(|b| self.eval_bin(&grid, b));
        Ok(inverse_transform(&s))
    }
}

/// Sector angle and lower ellipticity constant of `K` on a lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// `max |arg K(xi)|` over nonzero lattice points.
    pub phi1: f64,
    /// `min |K(xi)| / sum xi_k^{2l}` over nonzero lattice points.
    pub m0: f64,
}

impl ConditionReport {
    /// `lambda` is admissible when it is zero or `|arg lambda| < pi - phi1`.
    pub fn admits(&self, lambda: Complex64) -> bool {
        lambda == Complex64::new(0.0, 0.0) || lambda.arg().abs() < PI - self.phi1
    }

    pub fn require(&self, lambda: Complex64) -> Result<()> {
        if self.admits(lambda) {
            Ok(())
        } else {
            Err(Error::OutsideSector { re: lambda.re, im: lambda.im, max_arg: PI - self.phi1 })
        }
    }
}

/// Lower bound below which `M0` counts as zero.
pub const M0_TOLERANCE: f64 = 1e-12;

/// Check that `K` maps the lattice into a sector of opening `< pi` and
/// satisfies `|K(xi)| >= M0 sum xi_k^{2l}` with `M0 > 0`.
pub fn check_ellipticity(k: &PrincipalPart, grid: &Grid) -> Result<ConditionReport> {
    if grid.dim() != k.dim {
        return Err(Error::ShapeMismatch { expected: format!("{}-dimensional grid", k.dim), found: format!("{}", grid.dim()) });
    }
    let mut phi1 = 0.0f64;
    let mut m0 = f64::INFINITY;
    for bin in 1..grid.len() {
        let xi = bin_frequency(grid, bin);
        let kv = k.eval(&xi);
        let scale: f64 = xi.iter().map(|x| x.powi(2 * k.l as i32)).sum();
        m0 = m0.min(kv.norm() / scale);
        if kv.norm() > 0.0 {
            phi1 = phi1.max(kv.arg().abs());
        }
    }
    if m0 <= M0_TOLERANCE {
        return Err(Error::Ellipticity(EllipticityViolation::LowerBound { m0 }));
    }
    if phi1 >= PI {
        return Err(Error::Ellipticity(EllipticityViolation::Sector { phi1 }));
    }
    Ok(ConditionReport { phi1, m0 })
}

/// Coefficient of a lower-order term: constant, or sampled at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Uniform(OpValue),
    Sampled(Vec<OpValue>),
}

impl Coefficient {
    pub fn at(&self, point: usize) -> &OpValue {
        match self {
            Coefficient::Uniform(v) => v,
            Coefficient::Sampled(v) => &v[point],
        }
    }

    pub fn values(&self) -> Vec<&OpValue> {
        match self {
            Coefficient::Uniform(v) => vec![v],
            Coefficient::Sampled(v) => v.iter().collect(),
        }
    }
}

/// `A_alpha(x) D^alpha u` with `|alpha| < 2l` and exponent `mu_alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerOrderTerm {
    pub alpha: MultiIndex,
    pub coefficient: Coefficient,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticProblem {
    pub principal: PrincipalPart,
    pub a: PositiveOperator,
    pub lambda: Complex64,
    pub lower: Vec<LowerOrderTerm>,
}

impl EllipticProblem {
    pub fn new(principal: PrincipalPart, a: PositiveOperator, lambda: Complex64) -> Self {
        EllipticProblem { principal, a, lambda, lower: Vec::new() }
    }

    pub fn with_lower(mut self, terms: Vec<LowerOrderTerm>) -> Self {
        self.lower = terms;
        self
    }

    fn check_grid(&self, f: &GridFunction) -> Result<()> {
        if f.space().dim() != self.a.dim() {
            return Err(Error::ShapeMismatch { expected: format!("{} components", self.a.dim()), found: format!("{}", f.space().dim()) });
        }
        for t in &self.lower {
            if let Coefficient::Sampled(v) = &t.coefficient {
                if v.len() != f.grid().len() {
                    return Err(Error::ShapeMismatch { expected: format!("{} samples", f.grid().len()), found: format!("{}", v.len()) });
                }
            }
        }
        Ok(())
    }

    /// `L_1 u = sum A_alpha(x) D^alpha u`.
    pub fn apply_lower(&self, u: &GridFunction) -> Result<GridFunction> {
        let mut out = GridFunction::zeros(u.grid(), u.space());
        for t in &self.lower {
            let d = spectral_derivative(u, &t.alpha)?;
            let term = d.map_points(|p, v, o| t.coefficient.at(p).apply_into(v, o));
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// The full operator `(L_0 + lambda + L_1) u`.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        let top = self.principal.apply(u)?;
        let au = self.a.apply_field(1.0, u)?;
        let mut out = top.add(&au)?.add(&u.scale(self.lambda))?;
        if !self.lower.is_empty() {
            out = out.add(&self.apply_lower(u)?)?;
        }
        Ok(out)
    }

    /// `||L u - f|| / ||f||` in unweighted `L_2(l_q)`.
    pub fn residual(&self, u: &GridFunction, f: &GridFunction) -> Result<f64> {
        let r = self.apply(u)?.sub(f)?;
        let one = Weight::one(f.grid());
        let nf = weighted_lp_norm(f, 2.0, &one)?;
        let nr = weighted_lp_norm(&r, 2.0, &one)?;
        Ok(if nf == 0.0 { nr } else { nr / nf })
    }
}

/// `u = F^{-1} (A + K(xi) + lambda)^{-1} F f`, ignoring lower-order terms.
pub fn solve_principal(prob: &EllipticProblem, f: &GridFunction) -> Result<GridFunction> {
    prob.check_grid(f)?;
    let cond = check_ellipticity(&prob.principal, f.grid())?;
    cond.require(prob.lambda)?;
    principal_solve_unchecked(prob, f)
}

fn principal_solve_unchecked(prob: &EllipticProblem, f: &GridFunction) -> Result<GridFunction> {
    let grid = f.grid().clone();
    let n = f.space().dim();
    let mut s = forward_transform(f);
    s.coeffs_mut().par_chunks_mut(n).enumerate().try_for_each(|(bin, c)| -> Result<()> {
        let shift = prob.principal.eval_bin(&grid, bin) + prob.lambda;
        let r = prob.a.resolvent(shift).map_err(|e| Error::SymbolEvaluation {
            xi: bin_frequency(&grid, bin),
            reason: e.to_string(),
        })?;
        let v = r.apply(c);
        c.copy_from_slice(&v);
        Ok(())
    })?;
    Ok(inverse_transform(&s))
}

/// `sum_{|alpha| <= 2l} |lambda|^{1 - |alpha|/2l} ||D^alpha u|| + ||A u||`
/// with `0^0 = 1`, so at `lambda = 0` only top-order terms remain.
pub fn coercive_lhs(prob: &EllipticProblem, u: &GridFunction, p: f64, gamma: &Weight) -> Result<f64> {
    let two_l = 2 * prob.principal.l();
    let r = prob.lambda.norm();
    let mut total = weighted_lp_norm(&prob.a.apply_field(1.0, u)?, p, gamma)?;
    for alpha in MultiIndex::up_to_order(u.grid().dim(), two_l) {
        let e = 1.0 - alpha.order() as f64 / two_l as f64;
        let w = if e == 0.0 { 1.0 } else { r.powf(e) };
        if w == 0.0 {
            continue;
        }
        total += w * weighted_lp_norm(&spectral_derivative(u, &alpha)?, p, gamma)?;
    }
    Ok(total)
}

/// `(params, lhs, rhs)` of one report row.
type Row = (Vec<f64>, f64, f64);

/// Coercive ratios `LHS / ||f||` over forcings and spectral parameters.
///
/// Rows carry `(lambda_re, lambda_im, |lambda|, forcing index)`.
pub fn coercive_report(
    principal: &PrincipalPart,
    a: &PositiveOperator,
    corpus: &[GridFunction],
    lambdas: &[Complex64],
    p: f64,
    gamma: &Weight,
) -> Result<EstimateReport> {
    let mut report = EstimateReport::new(&["lambda_re", "lambda_im", "lambda_abs", "forcing"]);
    let rows: Vec<Result<Vec<Row>>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let prob = EllipticProblem::new(principal.clone(), a.clone(), lambda);
            corpus
                .iter()
                .enumerate()
                .map(|(k, f)| {
                    let u = solve_principal(&prob, f)?;
                    let lhs = coercive_lhs(&prob, &u, p, gamma)?;
                    let rhs = weighted_lp_norm(f, p, gamma)?;
                    Ok((vec![lambda.re, lambda.im, lambda.norm(), k as f64], lhs, rhs))
                })
                .collect()
        })
        .collect();
    for group in rows {
        for (params, lhs, rhs) in group? {
            report.push(params, lhs, rhs);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannOptions {
    /// Stop once `||g_k|| <= tol ||f||`.
    pub tol: f64,
    pub max_iter: usize,
    /// Consecutive non-decreasing term norms that signal divergence.
    pub window: usize,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        NeumannOptions { tol: 1e-10, max_iter: 200, window: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedSolution {
    pub u: GridFunction,
    /// `||g_k||` in `L_2(l_q)` for each term of the series.
    pub term_norms: Vec<f64>,
}

/// `u = R_0 sum_k (-L_1 R_0)^k f` with `R_0 = (L_0 + lambda)^{-1}`.
pub fn solve_perturbed(prob: &EllipticProblem, f: &GridFunction, opts: &NeumannOptions) -> Result<PerturbedSolution> {
    prob.check_grid(f)?;
    let cond = check_ellipticity(&prob.principal, f.grid())?;
    cond.require(prob.lambda)?;
    let one = Weight::one(f.grid());
    let nf = weighted_lp_norm(f, 2.0, &one)?;
    let mut u = GridFunction::zeros(f.grid(), f.space());
    if nf == 0.0 {
        return Ok(PerturbedSolution { u, term_norms: vec![0.0] });
    }
    let mut g = f.clone();
    let mut norms = vec![nf];
    let mut rising = 0usize;
    for _ in 0..opts.max_iter {
        let w = principal_solve_unchecked(prob, &g)?;
        u = u.add(&w)?;
        if prob.lower.is_empty() {
            return Ok(PerturbedSolution { u, term_norms: norms });
        }
        g = prob.apply_lower(&w)?.scale(Complex64::new(-1.0, 0.0));
        let ng = weighted_lp_norm(&g, 2.0, &one)?;
        let last = *norms.last().expect("non-empty");
        norms.push(ng);
        if ng <= opts.tol * nf {
            return Ok(PerturbedSolution { u, term_norms: norms });
        }
        rising = if ng >= last { rising + 1 } else { 0 };
        if rising >= opts.window {
            return Err(Error::NonContraction { norms });
        }
    }
    Err(Error::NonContraction { norms })
}

/// Per-term `max_x ||A_alpha(x) A^{-(1 - |alpha|/2l - mu_alpha)}||`.
pub fn lower_order_condition_check(terms: &[LowerOrderTerm], a: &PositiveOperator, l: u32) -> Result<Vec<f64>> {
    let q = a.space().q();
    terms
        .iter()
        .map(|t| {
            let top = 1.0 - t.alpha.order() as f64 / (2 * l) as f64;
            if !(t.mu > 0.0 && t.mu < top) {
                return Err(Error::InvalidInput(format!(
                    "mu for term {:?} must lie in (0, {top}), got {}",
                    t.alpha.0, t.mu
                )));
            }
            let inv = a.frac_power(-(top - t.mu)).value();
            Ok(t.coefficient.values().iter().map(|c| c.compose(&inv).opnorm(q)).fold(0.0, f64::max))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::ValueSpace;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn condition_examples() {
        let g = Grid::new(vec![PI], vec![16]).unwrap();
        let lap = PrincipalPart::laplacian(1);
        let r = check_ellipticity(&lap, &g).unwrap();
        assert_eq!(r.phi1, 0.0);
        assert!((r.m0 - 1.0).abs() < 1e-14);
        let rot = PrincipalPart::new(1, 1, vec![(MultiIndex(vec![2]), -Complex64::from_polar(1.0, PI / 4.0))]).unwrap();
        let r = check_ellipticity(&rot, &g).unwrap();
        assert!((r.phi1 - PI / 4.0).abs() < 1e-14);
        assert!((r.m0 - 1.0).abs() < 1e-14);
        let g2 = Grid::cube(2, PI, 8).unwrap();
        let r = check_ellipticity(&PrincipalPart::laplacian(2), &g2).unwrap();
        assert!((r.m0 - 1.0).abs() < 1e-14);
        let wave = PrincipalPart::new(2, 1, vec![(MultiIndex(vec![2, 0]), c(-1.0)), (MultiIndex(vec![0, 2]), c(1.0))]).unwrap();
        let err = check_ellipticity(&wave, &g2).unwrap_err();
        assert!(err.to_string().contains("M0 <= 0"));
        assert!(PrincipalPart::new(1, 1, vec![(MultiIndex(vec![2]), c(0.0))]).is_err());
    }

    #[test]
    fn cosine_forcing() {
        let g = Grid::new(vec![PI], vec![32]).unwrap();
        let sp = ValueSpace::new(2, 2.0).unwrap();
        let f = GridFunction::separable(&g, sp, |x| c(x[0].cos()), &[c(1.0), c(0.0)]).unwrap();
        let prob = EllipticProblem::new(PrincipalPart::laplacian(1), PositiveOperator::identity(sp), c(1.0));
        let u = solve_principal(&prob, &f).unwrap();
        assert!(u.rel_diff(&f.scale(c(1.0 / 3.0))) < 1e-12);
        assert!(prob.residual(&u, &f).unwrap() < 1e-12);
    }

    #[test]
    fn sector_rejection() {
        let g = Grid::new(vec![PI], vec![8]).unwrap();
        let f = GridFunction::separable(&g, ValueSpace::scalar(), |x| c(x[0].sin()), &[c(1.0)]).unwrap();
        let prob = EllipticProblem::new(PrincipalPart::laplacian(1), PositiveOperator::identity(ValueSpace::scalar()), c(-2.0));
        assert!(matches!(solve_principal(&prob, &f), Err(Error::OutsideSector { .. })));
    }

    #[test]
    fn lambda_zero_keeps_only_top_terms() {
        let g = Grid::new(vec![PI], vec![16]).unwrap();
        let sp = ValueSpace::scalar();
        let u = GridFunction::separable(&g, sp, |x| c((2.0 * x[0]).cos()), &[c(1.0)]).unwrap();
        let prob = EllipticProblem::new(PrincipalPart::laplacian(1), PositiveOperator::identity(sp), c(0.0));
        let one = Weight::one(&g);
        let lhs = coercive_lhs(&prob, &u, 2.0, &one).unwrap();
        let n = weighted_lp_norm(&u, 2.0, &one).unwrap();
        // ||A u|| + ||u''|| = n + 4 n
        assert!((lhs - 5.0 * n).abs() < 1e-10 * n);
    }

    #[test]
    fn zero_lower_terms_stop_immediately() {
        let g = Grid::new(vec![PI], vec![16]).unwrap();
        let sp = ValueSpace::scalar();
        let f = GridFunction::separable(&g, sp, |x| c(x[0].cos()), &[c(1.0)]).unwrap();
        let term = LowerOrderTerm { alpha: MultiIndex(vec![0]), coefficient: Coefficient::Uniform(OpValue::zero()), mu: 0.5 };
        let prob = EllipticProblem::new(PrincipalPart::laplacian(1), PositiveOperator::identity(sp), c(1.0)).with_lower(vec![term]);
        let s = solve_perturbed(&prob, &f, &NeumannOptions::default()).unwrap();
        assert_eq!(s.term_norms.len(), 2);
        assert_eq!(s.term_norms[1], 0.0);
        assert!(s.u.rel_diff(&f.scale(c(1.0 / 3.0))) < 1e-12);
    }

    #[test]
    fn lower_order_bounds() {
        let sp = ValueSpace::new(3, 2.0).unwrap();
        let a = PositiveOperator::dyadic(1.0, sp).unwrap();
        let mu = 0.25;
        let e = 1.0 - mu;
        let coeffs: Vec<OpValue> = (0..4).map(|k| a.frac_power(e).value().scale(c((k as f64).cos()))).collect();
        let term = LowerOrderTerm { alpha: MultiIndex(vec![0]), coefficient: Coefficient::Sampled(coeffs), mu };
        let b = lower_order_condition_check(std::slice::from_ref(&term), &a, 1).unwrap();
        assert!(b[0] <= 1.0 + 1e-10 && b[0] > 0.99);
        let bad = LowerOrderTerm { mu: 1.0, ..term };
        assert!(lower_order_condition_check(&[bad], &a, 1).is_err());
    }
}
