//! Cauchy problems `u' + (K(D) + A) u = f`, `u(0) = 0`, solved exactly per
//! Fourier mode, together with maximal-regularity reports, truncated systems
//! and degenerate equations reduced by a change of variables.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::elliptic::{check_ellipticity, PrincipalPart};
use crate::error::{Error, Result};
use crate::function_space::{
    degenerate_substitution, forward_transform, inverse_transform, mixed_norm, require_ap, spectral_derivative,
    Degeneracy, Grid, GridFunction, MultiIndex, Spectrum, Substitution, TimeSeries, ValueSpace, Weight,
};
use crate::multiplier::{bin_frequency, OperatorSymbol, ParabolicPhi};
use crate::operator::{ellipticity_constant, r_bound_estimate, OpValue, PositiveOperator, RBoundEstimate, RBoundOptions};
use crate::report::EstimateReport;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Elliptic part plus the uniform time grid `t_j = j T / m_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicProblem {
    pub principal: PrincipalPart,
    pub a: PositiveOperator,
    pub horizon: f64,
    pub steps: usize,
}

impl ParabolicProblem {
    pub fn new(principal: PrincipalPart, a: PositiveOperator, horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) || steps == 0 {
            return Err(Error::InvalidInput(format!("need T > 0 and m_t >= 1, got T = {horizon}, m_t = {steps}")));
        }
        Ok(ParabolicProblem { principal, a, horizon, steps })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Sample `f(t, x)` on the time grid and `grid`.
    pub fn sample_forcing(
        &self,
        grid: &Grid,
        space: ValueSpace,
        f: impl Fn(f64, &[f64], &mut [Complex64]) + Sync,
    ) -> Result<TimeSeries> {
        let dt = self.dt();
        let snaps = (0..=self.steps)
            .into_par_iter()
            .map(|j| GridFunction::from_fn(grid, space, |x, o| f(j as f64 * dt, x, o)))
            .collect::<Result<Vec<_>>>()?;
        TimeSeries::new(dt, snaps)
    }

    /// The elliptic part must leave room for a sector of angle above `pi/2`.
    fn check(&self, grid: &Grid) -> Result<()> {
        let cond = check_ellipticity(&self.principal, grid)?;
        if cond.phi1 >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::Ellipticity(crate::error::EllipticityViolation::Sector { phi1: cond.phi1 }));
        }
        Ok(())
    }
}

/// `(e^{-z}, phi_1(z), phi_2(z))` with `phi_1 = (1 - e^{-z})/z` and
/// `phi_2 = (1 - e^{-z}(1 + z))/z^2`; Taylor series near the origin.
pub fn phi_functions(z: Complex64) -> (Complex64, Complex64, Complex64) {
    let e = (-z).exp();
    if z.norm() < 0.5 {
        let (mut p1, mut p2) = (ZERO, ZERO);
        let mut term = Complex64::new(1.0, 0.0); // (-z)^k / k!
        for k in 0..30 {
            let kf = k as f64;
            p1 += term / (kf + 1.0);
            p2 += term / (kf + 2.0);
            term *= -z / (kf + 1.0);
        }
        (e, p1, p2)
    } else {
        (e, (1.0 - e) / z, (1.0 - e * (1.0 + z)) / (z * z))
    }
}

/// Samples of `(v, v')` for one mode.
pub type ModeHistory = (Vec<Complex64>, Vec<Complex64>);

/// Exact solution of `v' + c v = g`, `v(0) = 0`, for `g` piecewise linear
/// between the samples; returns `(v, v')` on the grid.
pub fn duhamel_mode(c: Complex64, dt: f64, g: &[Complex64]) -> ModeHistory {
    let (e, p1, p2) = phi_functions(c * dt);
    let (w0, w1) = (dt * p2, dt * (p1 - p2));
    let mut v = Vec::with_capacity(g.len());
    v.push(ZERO);
    for n in 1..g.len() {
        let next = e * v[n - 1] + w0 * g[n - 1] + w1 * g[n];
        v.push(next);
    }
    let dv = v.iter().zip(g).map(|(x, gi)| gi - c * x).collect();
    (v, dv)
}

/// `e^{-t (k + A)}`.
pub fn propagator(a: &PositiveOperator, k: Complex64, t: f64) -> OpValue {
    a.func(|d| (-(k + d) * t).exp())
}

/// Solution snapshots and their exact time derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchySolution {
    pub u: TimeSeries,
    pub du: TimeSeries,
}

fn spectra(series: &TimeSeries) -> Vec<Spectrum> {
    series.snapshots().par_iter().map(forward_transform).collect()
}

/// Mode-by-mode Duhamel solve of `u' + (K(D) + A) u = f`, `u(0) = 0`.
///
/// `A` is diagonalized once (trivially for the diagonal variant); each
/// frequency and eigen-index is then an independent scalar ODE.
pub fn solve_cauchy(prob: &ParabolicProblem, forcing: &TimeSeries) -> Result<CauchySolution> {
    let first = &forcing.snapshots()[0];
    let grid = first.grid().clone();
    let n = first.space().dim();
    if n != prob.a.dim() {
        return Err(Error::ShapeMismatch { expected: format!("{} components", prob.a.dim()), found: format!("{n}") });
    }
    if forcing.len() != prob.steps + 1 || (forcing.dt() - prob.dt()).abs() > 1e-12 * prob.dt() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} snapshots with dt = {}", prob.steps + 1, prob.dt()),
            found: format!("{} snapshots with dt = {}", forcing.len(), forcing.dt()),
        });
    }
    prob.check(&grid)?;
    let fs = spectra(forcing);
    let times = forcing.len();
    let dt = forcing.dt();
    let eig = prob.a.eigenvalues().to_vec();
    let vecs = prob.a.eigenvectors().cloned();

    let modes: Vec<ModeHistory> = (0..grid.len())
        .into_par_iter()
        .map(|bin| {
            let k = prob.principal.eval_bin(&grid, bin);
            let mut v = vec![ZERO; times * n];
            let mut dv = vec![ZERO; times * n];
            let mut g = vec![ZERO; times];
            for i in 0..n {
                for (t, s) in fs.iter().enumerate() {
                    let c = s.at(bin);
                    g[t] = match &vecs {
                        None => c[i],
                        Some(m) => (0..n).map(|r| m[(r, i)] * c[r]).sum(),
                    };
                }
                let (vi, dvi) = duhamel_mode(k + eig[i], dt, &g);
                for t in 0..times {
                    v[t * n + i] = vi[t];
                    dv[t * n + i] = dvi[t];
                }
            }
            if let Some(m) = &vecs {
                for t in 0..times {
                    for buf in [&mut v, &mut dv] {
                        let w: Vec<Complex64> = buf[t * n..(t + 1) * n].to_vec();
                        for r in 0..n {
                            buf[t * n + r] = (0..n).map(|i| m[(r, i)] * w[i]).sum();
                        }
                    }
                }
            }
            (v, dv)
        })
        .collect();

    let rebuild = |pick: fn(&ModeHistory) -> &Vec<Complex64>| -> Result<TimeSeries> {
        let snaps = (0..times)
            .into_par_iter()
            .map(|t| {
                let mut coeffs = vec![ZERO; grid.len() * n];
                for (bin, mode) in modes.iter().enumerate() {
                    coeffs[bin * n..(bin + 1) * n].copy_from_slice(&pick(mode)[t * n..(t + 1) * n]);
                }
                Ok(inverse_transform(&Spectrum::new(grid.clone(), first.space(), coeffs)?))
            })
            .collect::<Result<Vec<_>>>()?;
        TimeSeries::new(dt, snaps)
    };
    let mut u = rebuild(|m| &m.0)?;
    let du = rebuild(|m| &m.1)?;
    // the initial state is exactly zero, independent of transform round-off
    let mut snaps = u.into_snapshots();
    snaps[0] = GridFunction::zeros(&grid, first.space());
    u = TimeSeries::new(dt, snaps)?;
    Ok(CauchySolution { u, du })
}

/// `||u'||_F + sum_{|alpha| = 2l} ||D^alpha u||_F + ||A u||_F` in the mixed norm.
pub fn maximal_regularity_lhs(prob: &ParabolicProblem, sol: &CauchySolution, p: f64, p1: f64, gamma: &Weight) -> Result<f64> {
    let mut total = sol.du.mixed_norm(p, p1, gamma)?;
    total += sol.u.map(|s| prob.a.apply_field(1.0, s))?.mixed_norm(p, p1, gamma)?;
    let n = prob.principal.dim();
    for alpha in MultiIndex::of_order(n, 2 * prob.principal.l()) {
        total += sol.u.map(|s| spectral_derivative(s, &alpha))?.mixed_norm(p, p1, gamma)?;
    }
    Ok(total)
}

/// Ratios of the maximal-regularity estimate over a forcing corpus; rows carry
/// the forcing index.
pub fn maximal_regularity_report(
    prob: &ParabolicProblem,
    corpus: &[TimeSeries],
    p: f64,
    p1: f64,
    gamma: &Weight,
) -> Result<EstimateReport> {
    let mut report = EstimateReport::new(&["forcing"]);
    for (k, f) in corpus.iter().enumerate() {
        let rhs = f.mixed_norm(p, p1, gamma)?;
        if rhs == 0.0 {
            report.skipped += 1;
            continue;
        }
        let sol = solve_cauchy(prob, f)?;
        report.push(vec![k as f64], maximal_regularity_lhs(prob, &sol, p, p1, gamma)?, rhs);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RPositivityReport {
    pub estimate: RBoundEstimate,
    /// `(xi, lambda)` pairs dropped because `A + K(xi) + lambda` was singular.
    pub skipped: usize,
}

/// R-bound estimate of `{lambda (A + K(xi) + lambda)^{-1}}` over the lattice
/// of `grid` and the given `lambda` samples.
pub fn rpositivity_symbol_check(
    prob: &ParabolicProblem,
    grid: &Grid,
    lambdas: &[Complex64],
    opts: &RBoundOptions,
) -> Result<RPositivityReport> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("no lambda samples".into()));
    }
    let mut family = Vec::new();
    let mut skipped = 0;
    for &lambda in lambdas {
        let phi = ParabolicPhi { a: prob.a.clone(), principal: prob.principal.clone(), lambda };
        for bin in 0..grid.len() {
            match phi.eval(&bin_frequency(grid, bin)) {
                Ok(v) if v.is_finite() => family.push(v),
                Ok(_) | Err(Error::Singular { .. }) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if family.is_empty() {
        return Err(Error::Singular { at: "every (xi, lambda) sample".into() });
    }
    Ok(RPositivityReport { estimate: r_bound_estimate(&family, prob.a.space(), opts)?, skipped })
}

/// Truncated infinite system with a symmetric positive-definite coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemProblem {
    pub parabolic: ParabolicProblem,
    /// Smallest eigenvalue of the coupling matrix.
    pub c0: f64,
}

impl SystemProblem {
    pub fn new(principal: PrincipalPart, coupling: DMatrix<f64>, q: f64, horizon: f64, steps: usize) -> Result<Self> {
        let c0 = ellipticity_constant(&coupling)?;
        if c0 <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: c0 });
        }
        let a = PositiveOperator::symmetric(coupling, q)?;
        Ok(SystemProblem { parabolic: ParabolicProblem::new(principal, a, horizon, steps)?, c0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSolution {
    pub solution: CauchySolution,
    /// Rows `variant = 0`: exponent `p` in space and time; `variant = 1`:
    /// spatial `p`, temporal `p1`.
    pub report: EstimateReport,
}

pub fn solve_system(prob: &SystemProblem, forcing: &TimeSeries, p: f64, p1: f64, gamma: &Weight) -> Result<SystemSolution> {
    let par = &prob.parabolic;
    let solution = solve_cauchy(par, forcing)?;
    let mut report = EstimateReport::new(&["variant"]);
    for (variant, outer) in [(0.0, p), (1.0, p1)] {
        let lhs = maximal_regularity_lhs(par, &solution, p, outer, gamma)?;
        report.push(vec![variant], lhs, forcing.mixed_norm(p, outer, gamma)?);
    }
    Ok(SystemSolution { solution, report })
}

/// Degenerate equation in `x`, with derivatives `(gamma_k d/dx_k)^{alpha_k}`.
#[derive(Debug, Clone)]
pub struct DegenerateProblem {
    pub profiles: Vec<Degeneracy>,
    pub grid: Grid,
    pub parabolic: ParabolicProblem,
    /// Largest acceptable A_p constant of the induced weight.
    pub ap_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct DegenerateSolution {
    pub substitution: Substitution,
    /// Forcing sampled at the `x`-nodes of the uniform `tau` grid.
    pub forcing: TimeSeries,
    /// Values at the same nodes.
    pub solution: CauchySolution,
    pub ap_constant: f64,
    /// Relative mixed `L_2` residual with degenerate derivatives.
    pub residual: f64,
    pub report: EstimateReport,
}

/// `(gamma_k d/dx_k)^{alpha_k}` applied factor by factor. Each factor is the
/// spectral `d/dtau_k`, turned into `d/dx_k` by dividing by `gamma_k` and then
/// scaled back; where `gamma_k` vanishes the `tau`-derivative is the limit.
pub fn degenerate_derivative(sub: &Substitution, u: &GridFunction, alpha: &MultiIndex) -> Result<GridFunction> {
    let grid = sub.tau_grid();
    let n = grid.dim();
    let mut w = u.clone();
    for k in 0..n {
        let gamma = sub.node_gamma(k);
        for step in 0..alpha.0[k] {
            let mut s = forward_transform(&w);
            let zero_nyquist = alpha.0[k] % 2 == 1 && step == 0;
            s.scale_bins(|bin| {
                let j = grid.unravel(bin)[k];
                if zero_nyquist && j == grid.nyquist_bin(k) {
                    return ZERO;
                }
                let xi = Grid::signed_index(j, grid.sizes()[k]) as f64 * std::f64::consts::PI / grid.extents()[k];
                Complex64::new(0.0, xi)
            });
            let dtau = inverse_transform(&s);
            w = dtau.map_points(|p, v, o| {
                let g = gamma[grid.unravel(p)[k]];
                for (oi, vi) in o.iter_mut().zip(v) {
                    *oi = if g > 0.0 { g * (vi / g) } else { *vi };
                }
            });
        }
    }
    Ok(w)
}

/// Solve the degenerate problem through `tau_k = int_0^{x_k} gamma_k^{-1}`.
pub fn solve_degenerate(
    prob: &DegenerateProblem,
    space: ValueSpace,
    f: impl Fn(f64, &[f64], &mut [Complex64]) + Sync,
    p: f64,
    p1: f64,
) -> Result<DegenerateSolution> {
    let sub = degenerate_substitution(&prob.profiles, &prob.grid)?;
    let weight = sub.induced_weight().clone();
    let ap = require_ap(&weight, p, prob.ap_threshold)?;
    let tau_grid = sub.tau_grid().clone();
    let par = &prob.parabolic;
    let dt = par.dt();
    let snaps = (0..=par.steps)
        .into_par_iter()
        .map(|j| {
            let t = j as f64 * dt;
            GridFunction::zeros(&tau_grid, space).map_points(|p, _, o| {
                let x: Vec<f64> = tau_grid.unravel(p).iter().enumerate().map(|(k, &i)| sub.nodes(k)[i]).collect();
                f(t, &x, o)
            })
        })
        .collect();
    let forcing = TimeSeries::new(dt, snaps)?;
    let solution = solve_cauchy(par, &forcing)?;

    let mut resid = Vec::with_capacity(forcing.len());
    for (j, u) in solution.u.snapshots().iter().enumerate() {
        let mut r = solution.du.snapshots()[j].add(&par.a.apply_field(1.0, u)?)?;
        for (alpha, a) in par.principal.terms() {
            r = r.add(&degenerate_derivative(&sub, u, alpha)?.scale(*a))?;
        }
        resid.push(r.sub(&forcing.snapshots()[j])?);
    }
    let nf = forcing.mixed_norm(2.0, 2.0, &weight)?;
    let nr = mixed_norm(&resid, 2.0, 2.0, &weight, forcing.dt())?;
    let residual = if nf == 0.0 { nr } else { nr / nf };

    let mut report = EstimateReport::new(&["forcing"]);
    report.push(vec![0.0], maximal_regularity_lhs(par, &solution, p, p1, &weight)?, forcing.mixed_norm(p, p1, &weight)?);
    Ok(DegenerateSolution { substitution: sub, forcing, solution, ap_constant: ap, residual, report })
}
