//! Positive operators on truncated `l_q^N`, sectors, and R-bound estimation.

mod rbound;
mod value;

pub use rbound::{r_bound_estimate, RBoundEstimate, RBoundMethod, RBoundOptions};
pub use value::OpValue;

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::function_space::{GridFunction, ValueSpace};

#[derive(Debug, Clone, PartialEq)]
enum Structure {
    Diagonal(Vec<f64>),
    Symmetric {
        matrix: DMatrix<f64>,
        eigenvalues: Vec<f64>,
        eigenvectors: DMatrix<f64>,
    },
}

/// A positive operator on `l_q^N`: either diagonal or a symmetric
/// positive-definite matrix. The eigendecomposition is computed once here.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveOperator {
    space: ValueSpace,
    structure: Structure,
}

fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    (m - m.transpose()).iter().fold(0.0f64, |a, x| a.max(x.abs())) / scale
}

impl PositiveOperator {
    /// `diag(2^{s i})`, `i = 1..N`.
    pub fn dyadic(s: f64, space: ValueSpace) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidInput(format!("dyadic exponent s must be > 0, got {s}")));
        }
        let d = (1..=space.dim()).map(|i| (s * i as f64).exp2()).collect();
        PositiveOperator::diagonal(d, space)
    }

    pub fn identity(space: ValueSpace) -> Self {
        PositiveOperator { structure: Structure::Diagonal(vec![1.0; space.dim()]), space }
    }

    pub fn diagonal(entries: Vec<f64>, space: ValueSpace) -> Result<Self> {
        if entries.len() != space.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} diagonal entries", space.dim()),
                found: format!("{}", entries.len()),
            });
        }
        if let Some(bad) = entries.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: *bad });
        }
        Ok(PositiveOperator { structure: Structure::Diagonal(entries), space })
    }

    /// Symmetric matrix; rejected unless its smallest eigenvalue is positive.
    pub fn symmetric(matrix: DMatrix<f64>, q: f64) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::ShapeMismatch {
                expected: "square non-empty matrix".into(),
                found: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        if symmetry_defect(&matrix) > 1e-12 {
            return Err(Error::InvalidInput("matrix is not symmetric".into()));
        }
        let space = ValueSpace::new(n, q)?;
        let eig = SymmetricEigen::new(matrix.clone());
        let min = eig.eigenvalues.min();
        if min.is_nan() || min <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(PositiveOperator {
            space,
            structure: Structure::Symmetric {
                matrix,
                eigenvalues: eig.eigenvalues.iter().copied().collect(),
                eigenvectors: eig.eigenvectors,
            },
        })
    }

    pub fn space(&self) -> ValueSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.structure, Structure::Diagonal(_))
    }

    /// Eigenvalues (the diagonal entries, in order, for the diagonal variant).
    pub fn eigenvalues(&self) -> &[f64] {
        match &self.structure {
            Structure::Diagonal(d) => d,
            Structure::Symmetric { eigenvalues, .. } => eigenvalues,
        }
    }

    /// Orthonormal eigenvectors as columns; `None` for the diagonal variant.
    pub fn eigenvectors(&self) -> Option<&DMatrix<f64>> {
        match &self.structure {
            Structure::Diagonal(_) => None,
            Structure::Symmetric { eigenvectors, .. } => Some(eigenvectors),
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.structure {
            Structure::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            Structure::Symmetric { matrix, .. } => matrix.clone(),
        }
    }

    /// `f(A)` through the eigendecomposition: entrywise, or `V f(Lambda) V^T`.
    pub fn func(&self, f: impl Fn(f64) -> Complex64) -> OpValue {
        match &self.structure {
            Structure::Diagonal(d) => OpValue::Diagonal(d.iter().map(|&x| f(x)).collect()),
            Structure::Symmetric { eigenvalues, eigenvectors, .. } => {
                let n = eigenvalues.len();
                let fl: Vec<Complex64> = eigenvalues.iter().map(|&x| f(x)).collect();
                let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
                for i in 0..n {
                    for j in 0..n {
                        let mut s = Complex64::new(0.0, 0.0);
                        for k in 0..n {
                            s += fl[k] * (eigenvectors[(i, k)] * eigenvectors[(j, k)]);
                        }
                        m[(i, j)] = s;
                    }
                }
                OpValue::Dense(m)
            }
        }
    }

    /// `A` itself as an [`OpValue`].
    pub fn value(&self) -> OpValue {
        match &self.structure {
            Structure::Diagonal(d) => OpValue::Diagonal(d.iter().map(|&x| Complex64::new(x, 0.0)).collect()),
            Structure::Symmetric { matrix, .. } => OpValue::Dense(matrix.map(|x| Complex64::new(x, 0.0))),
        }
    }

    /// `A^theta`.
    pub fn frac_power(&self, theta: f64) -> PositiveOperator {
        let structure = match &self.structure {
            Structure::Diagonal(d) => Structure::Diagonal(d.iter().map(|x| x.powf(theta)).collect()),
            Structure::Symmetric { eigenvalues, eigenvectors, .. } => {
                let ev: Vec<f64> = eigenvalues.iter().map(|x| x.powf(theta)).collect();
                let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&ev));
                let mut matrix = eigenvectors * lam * eigenvectors.transpose();
                matrix = (&matrix + matrix.transpose()) * 0.5;
                Structure::Symmetric { matrix, eigenvalues: ev, eigenvectors: eigenvectors.clone() }
            }
        };
        PositiveOperator { space: self.space, structure }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.value().apply(v)
    }

    /// `(A + lambda)^{-1}`, failing when `-lambda` is (numerically) an eigenvalue.
    pub fn resolvent(&self, lambda: Complex64) -> Result<OpValue> {
        for &d in self.eigenvalues() {
            let den = lambda + d;
            if den.norm() <= 1e-14 * (d.abs() + lambda.norm()) {
                return Err(Error::Singular { at: format!("lambda = {lambda}") });
            }
        }
        Ok(self.func(|d| 1.0 / (lambda + d)))
    }

    pub fn resolvent_apply(&self, lambda: Complex64, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::ShapeMismatch { expected: format!("{}", self.dim()), found: format!("{}", v.len()) });
        }
        Ok(self.resolvent(lambda)?.apply(v))
    }

    /// Apply `A^theta` pointwise to a grid function.
    pub fn apply_field(&self, theta: f64, u: &GridFunction) -> Result<GridFunction> {
        if u.space().dim() != self.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} components", self.dim()),
                found: format!("{}", u.space().dim()),
            });
        }
        if theta == 0.0 {
            return Ok(u.clone());
        }
        let op = if theta == 1.0 { self.value() } else { self.frac_power(theta).value() };
        Ok(u.map_points(|_, v, out| op.apply_into(v, out)))
    }

    /// Sampled `sup (1 + |xi|) ||(A + xi)^{-1}||` over the sector `S_phi`.
    ///
    /// A lower bound for the positivity constant `M`.
    pub fn positivity_bound(&self, phi: f64, sampling: &SectorSampling) -> Result<f64> {
        let sector = Sector::new(phi)?;
        let q = self.space.q();
        let mut best = 0.0f64;
        for xi in sector.samples(sampling) {
            let r = self.resolvent(xi)?;
            best = best.max((1.0 + xi.norm()) * r.opnorm(q));
        }
        Ok(best)
    }
}

/// Closed sector `S_phi = { z : |arg z| <= phi } ∪ {0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    phi: f64,
}

impl Sector {
    pub fn new(phi: f64) -> Result<Self> {
        if !(0.0..PI).contains(&phi) {
            return Err(Error::InvalidInput(format!("sector angle must lie in [0, pi), got {phi}")));
        }
        Ok(Sector { phi })
    }

    pub fn angle(&self) -> f64 {
        self.phi
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z == Complex64::new(0.0, 0.0) || z.arg().abs() <= self.phi
    }

    /// Log-spaced moduli times a uniform angle grid, plus the origin.
    pub fn samples(&self, s: &SectorSampling) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0)];
        let angles: Vec<f64> = if self.phi == 0.0 || s.angles <= 1 {
            vec![0.0]
        } else {
            (0..s.angles).map(|k| -self.phi + 2.0 * self.phi * k as f64 / (s.angles - 1) as f64).collect()
        };
        for r in s.moduli() {
            for &a in &angles {
                out.push(Complex64::from_polar(r, a));
            }
        }
        out
    }
}

/// How a sector is sampled: `per_decade` log-spaced moduli on
/// `[min_modulus, max_modulus]` and `angles` uniform angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorSampling {
    pub min_modulus: f64,
    pub max_modulus: f64,
    pub per_decade: usize,
    pub angles: usize,
}

impl Default for SectorSampling {
    fn default() -> Self {
        SectorSampling { min_modulus: 1e-3, max_modulus: 1e6, per_decade: 19, angles: 33 }
    }
}

impl SectorSampling {
    pub fn moduli(&self) -> Vec<f64> {
        let (a, b) = (self.min_modulus.log10(), self.max_modulus.log10());
        let count = (((b - a) * self.per_decade as f64).round() as usize).max(1);
        (0..=count).map(|k| 10f64.powf(a + (b - a) * k as f64 / count as f64)).collect()
    }

    /// Twice as many moduli and angles (keeping odd angle counts odd).
    pub fn doubled(&self) -> Self {
        SectorSampling { per_decade: self.per_decade * 2, angles: self.angles * 2 - 1, ..*self }
    }
}

/// `B(lambda) = lambda (A + lambda)^{-1}` by an LU solve.
pub fn resolvent_multiplier(a: &DMatrix<f64>, lambda: Complex64) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    let mut shifted = a.map(|x| Complex64::new(x, 0.0));
    for i in 0..n {
        shifted[(i, i)] += lambda;
    }
    let rhs = DMatrix::from_diagonal_element(n, n, lambda);
    shifted
        .lu()
        .solve(&rhs)
        .filter(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| Error::Singular { at: format!("lambda = {lambda}") })
}

/// `max_{lambda, i} (sum_j |B_ij(lambda)|^q)^{1/q}` with `B = lambda (A + lambda)^{-1}`.
pub fn matrix_rpositivity_check(a: &PositiveOperator, lambdas: &[Complex64], q: f64) -> Result<f64> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("no lambda samples".into()));
    }
    let m = a.matrix();
    let mut best = 0.0f64;
    for &l in lambdas {
        let b = resolvent_multiplier(&m, l)?;
        for row in b.row_iter() {
            let v: Vec<Complex64> = row.iter().copied().collect();
            best = best.max(crate::function_space::lq_norm(&v, q));
        }
    }
    Ok(best)
}

/// Smallest eigenvalue of a symmetric matrix: the best `C_0` in
/// `sum a_ij xi_i xi_j >= C_0 |xi|^2` (positive iff the form is elliptic).
pub fn ellipticity_constant(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() == 0 || a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch { expected: "square matrix".into(), found: format!("{}x{}", a.nrows(), a.ncols()) });
    }
    if symmetry_defect(a) > 1e-12 {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    Ok(SymmetricEigen::new(a.clone()).eigenvalues.min())
}
