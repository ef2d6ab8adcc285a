use std::fmt;
use std::sync::{Arc, OnceLock};

use super::grid::Grid;
use super::weight::Weight;
use crate::error::{Error, Result};

/// A degeneracy profile `gamma_k(y) > 0` (possibly vanishing at `y = 0`).
#[derive(Clone)]
pub enum Degeneracy {
    One,
    /// `|y|^nu`.
    Power(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degeneracy::One => write!(f, "One"),
            Degeneracy::Power(nu) => write!(f, "Power({nu})"),
            Degeneracy::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Degeneracy {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Degeneracy::One => 1.0,
            Degeneracy::Power(nu) => y.abs().powf(*nu),
            Degeneracy::Custom(f) => f(y),
        }
    }
}

const GL_ORDER: usize = 16;
/// Dyadic panels used toward the origin before extrapolating the tail.
const PANELS: usize = 60;
/// Panel-to-panel ratio at or above which `1/gamma` is declared non-integrable.
pub const DIVERGENCE_RATIO: f64 = 0.999;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton's method.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

fn gl_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * gauss_legendre().iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>()
}

/// `int_0^x 1/gamma` on dyadic panels `[x 2^{-j-1}, x 2^{-j}]` with a
/// geometric tail; also returns the limiting panel ratio.
fn integral_from_origin(g: &Degeneracy, x: f64) -> (f64, f64) {
    if x == 0.0 || matches!(g, Degeneracy::One) {
        return (x, 0.0);
    }
    let inv = |y: f64| 1.0 / g.eval(y);
    let mut total = 0.0;
    let mut prev = 0.0;
    let mut rho = 0.0;
    let mut hi = x;
    for j in 0..PANELS {
        let lo = 0.5 * hi;
        let panel = gl_panel(&inv, lo, hi);
        if j > 0 && prev != 0.0 {
            rho = panel / prev;
        }
        total += panel;
        prev = panel;
        hi = lo;
    }
    if rho > 0.0 && rho < 1.0 {
        total += prev * rho / (1.0 - rho);
    }
    (total, rho)
}

/// The change of variables `tau_k(x_k) = int_0^{x_k} gamma_k^{-1}` on every
/// axis, with the uniform grid in `tau` and the induced weight on it.
#[derive(Debug, Clone)]
pub struct Substitution {
    profiles: Vec<Degeneracy>,
    x_grid: Grid,
    tau_grid: Grid,
    nodes: Vec<Vec<f64>>,
    induced: Weight,
}

impl Substitution {
    pub fn x_grid(&self) -> &Grid {
        &self.x_grid
    }

    /// Uniform periodic grid on `[-tau_k(L_k), tau_k(L_k))`.
    pub fn tau_grid(&self) -> &Grid {
        &self.tau_grid
    }

    /// `x_k(tau_j)` for each uniform `tau`-grid point.
    pub fn nodes(&self, axis: usize) -> &[f64] {
        &self.nodes[axis]
    }

    /// `gamma~ = prod_k gamma_k(x_k(tau_k))`, sampled on the `tau` grid.
    pub fn induced_weight(&self) -> &Weight {
        &self.induced
    }

    pub fn profile(&self, axis: usize) -> &Degeneracy {
        &self.profiles[axis]
    }

    pub fn tau(&self, axis: usize, x: f64) -> f64 {
        integral_from_origin(&self.profiles[axis], x).0
    }

    /// Numerical inverse of `tau` on one axis.
    pub fn x_of_tau(&self, axis: usize, tau: f64) -> f64 {
        invert(&self.profiles[axis], tau, self.x_grid.extents()[axis], self.tau_grid.extents()[axis])
    }

    /// `gamma_k` at the `x`-node of each `tau`-grid point along `axis`.
    pub fn node_gamma(&self, axis: usize) -> Vec<f64> {
        self.nodes[axis].iter().map(|&x| self.profiles[axis].eval(x)).collect()
    }
}

/// Safeguarded Newton for `tau(x) = target` on `[-l, l]`, using `tau' = 1/gamma`.
fn invert(g: &Degeneracy, target: f64, l: f64, t_max: f64) -> f64 {
    if target == 0.0 || matches!(g, Degeneracy::One) {
        return target;
    }
    let (mut lo, mut hi) = (-l, l);
    let mut x = target / t_max * l;
    for _ in 0..200 {
        let f = integral_from_origin(g, x).0 - target;
        if f.abs() <= 1e-15 * t_max {
            return x;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = x - f * g.eval(x);
        x = if step > lo && step < hi && step.is_finite() { step } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 * l {
            break;
        }
    }
    x
}

/// Build the substitution for per-axis profiles on `grid`.
///
/// Fails with [`Error::NonIntegrable`] when `1/gamma_k` is not integrable at
/// the origin, and requires `tau_k(-L_k) = -tau_k(L_k)` so the image is again
/// a symmetric periodic box.
pub fn degenerate_substitution(profiles: &[Degeneracy], grid: &Grid) -> Result<Substitution> {
    let n = grid.dim();
    if profiles.len() != n {
        return Err(Error::ShapeMismatch { expected: format!("{n} profiles"), found: format!("{}", profiles.len()) });
    }
    let mut extents = Vec::with_capacity(n);
    for (k, g) in profiles.iter().enumerate() {
        let l = grid.extents()[k];
        for y in grid.axis_midpoints(k) {
            let v = g.eval(y);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("profile on axis {k} is not positive at y = {y}")));
            }
        }
        let (right, rho_r) = integral_from_origin(g, l);
        let (left, rho_l) = integral_from_origin(g, -l);
        let ratio = rho_r.max(rho_l);
        if ratio >= DIVERGENCE_RATIO || !right.is_finite() || !left.is_finite() {
            return Err(Error::NonIntegrable { axis: k, ratio });
        }
        if (right + left).abs() > 1e-9 * right.abs() {
            return Err(Error::InvalidInput(format!(
                "substitution on axis {k} is not odd: tau(-L) = {left}, tau(L) = {right}"
            )));
        }
        extents.push(right);
    }
    let tau_grid = Grid::new(extents, grid.sizes().to_vec())?;
    let nodes: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let (l, t) = (grid.extents()[k], tau_grid.extents()[k]);
            tau_grid.axis_points(k).iter().map(|&tau| invert(&profiles[k], tau, l, t)).collect()
        })
        .collect();
    let mid_gamma: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let (l, t) = (grid.extents()[k], tau_grid.extents()[k]);
            tau_grid.axis_midpoints(k).iter().map(|&tau| profiles[k].eval(invert(&profiles[k], tau, l, t))).collect()
        })
        .collect();
    let values = (0..tau_grid.len())
        .map(|p| tau_grid.unravel(p).iter().enumerate().map(|(k, &j)| mid_gamma[k][j]).product())
        .collect();
    let induced = Weight::tabulated(&tau_grid, values)?;
    Ok(Substitution { profiles: profiles.to_vec(), x_grid: grid.clone(), tau_grid, nodes, induced })
}
