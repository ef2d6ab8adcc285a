//! Dense reference discretizations built from the closed-form Fourier
//! differentiation matrices, independent of the FFT path.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use symlab::function_space::Grid;

pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// First- and second-order differentiation matrices on `m` equispaced points
/// of period `2L`; higher orders are products, matching `(i xi)^a` with the
/// Nyquist mode dropped for odd `a`.
pub fn diff_matrix(m: usize, half_period: f64, order: u32) -> DMatrix<f64> {
    let h = 2.0 * PI / m as f64;
    let s = PI / half_period;
    let d1 = DMatrix::from_fn(m, m, |j, k| {
        if j == k {
            0.0
        } else {
            let d = j as f64 - k as f64;
            let sign = if (j + m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            0.5 * sign / (d * h / 2.0).tan() * s
        }
    });
    let d2 = DMatrix::from_fn(m, m, |j, k| {
        if j == k {
            (-PI * PI / (3.0 * h * h) - 1.0 / 6.0) * s * s
        } else {
            let d = j as f64 - k as f64;
            let sign = if (j + m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            -sign / (2.0 * (d * h / 2.0).sin().powi(2)) * s * s
        }
    });
    let mut out = DMatrix::identity(m, m);
    for _ in 0..order / 2 {
        out = &out * &d2;
    }
    if order % 2 == 1 {
        out = &out * &d1;
    }
    out
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// `sum_alpha a_alpha D^alpha (x) I_N + I_M (x) A` in point-major layout.
pub fn dense_operator(grid: &Grid, terms: &[(Vec<u32>, Complex64)], a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let total = grid.len() * n;
    let mut out = DMatrix::<Complex64>::zeros(total, total);
    for (alpha, coef) in terms {
        let mut m = DMatrix::<Complex64>::identity(1, 1);
        for (k, &ak) in alpha.iter().enumerate() {
            let d = diff_matrix(grid.sizes()[k], grid.extents()[k], ak).map(c);
            m = kron(&m, &d);
        }
        out += kron(&m, &DMatrix::identity(n, n)) * *coef;
    }
    out += kron(&DMatrix::identity(grid.len(), grid.len()), a);
    out
}

#[test]
fn diff_matrix_differentiates_trig_polynomials() {
    let (m, l) = (16, 2.0);
    let x: Vec<f64> = (0..m).map(|j| -l + j as f64 * 2.0 * l / m as f64).collect();
    let w = PI / l;
    let u = nalgebra::DVector::from_iterator(m, x.iter().map(|&t| (3.0 * w * t).sin()));
    let d1 = diff_matrix(m, l, 1) * &u;
    let d2 = diff_matrix(m, l, 2) * &u;
    for (j, &t) in x.iter().enumerate() {
        assert!((d1[j] - 3.0 * w * (3.0 * w * t).cos()).abs() < 1e-10);
        assert!((d2[j] + 9.0 * w * w * (3.0 * w * t).sin()).abs() < 1e-10);
    }
}
