use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::function_space::lq_norm;

/// The value of an operator-valued function at one point.
///
/// Scalars act as multiples of the identity, so a single type covers scalar
/// symbols, diagonal (`l_q^s`-type) operators and dense matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum OpValue {
    Scalar(Complex64),
    Diagonal(Vec<Complex64>),
    Dense(DMatrix<Complex64>),
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl OpValue {
    pub fn identity() -> Self {
        OpValue::Scalar(Complex64::new(1.0, 0.0))
    }

    pub fn zero() -> Self {
        OpValue::Scalar(ZERO)
    }

    pub fn is_finite(&self) -> bool {
        let ok = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        match self {
            OpValue::Scalar(c) => ok(c),
            OpValue::Diagonal(d) => d.iter().all(ok),
            OpValue::Dense(m) => m.iter().all(ok),
        }
    }

    /// Explicit `n x n` matrix.
    pub fn to_dense(&self, n: usize) -> DMatrix<Complex64> {
        match self {
            OpValue::Scalar(c) => DMatrix::from_diagonal_element(n, n, *c),
            OpValue::Diagonal(d) => DMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { ZERO }),
            OpValue::Dense(m) => m.clone(),
        }
    }

    /// `out = T v`.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        match self {
            OpValue::Scalar(c) => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o = c * x;
                }
            }
            OpValue::Diagonal(d) => {
                for ((o, x), di) in out.iter_mut().zip(v).zip(d) {
                    *o = di * x;
                }
            }
            OpValue::Dense(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut s = ZERO;
                    for (j, x) in v.iter().enumerate() {
                        s += m[(i, j)] * x;
                    }
                    *o = s;
                }
            }
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; v.len()];
        self.apply_into(v, &mut out);
        out
    }

    /// `self * other` (apply `other` first).
    pub fn compose(&self, other: &OpValue) -> OpValue {
        use OpValue::*;
        match (self, other) {
            (Scalar(a), Scalar(b)) => Scalar(a * b),
            (Scalar(a), Diagonal(d)) | (Diagonal(d), Scalar(a)) => Diagonal(d.iter().map(|x| a * x).collect()),
            (Scalar(a), Dense(m)) | (Dense(m), Scalar(a)) => Dense(m * *a),
            (Diagonal(a), Diagonal(b)) => Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect()),
            (Diagonal(d), Dense(m)) => {
                let mut m = m.clone();
                for (i, mut row) in m.row_iter_mut().enumerate() {
                    row *= d[i];
                }
                Dense(m)
            }
            (Dense(m), Diagonal(d)) => {
                let mut m = m.clone();
                for (j, mut col) in m.column_iter_mut().enumerate() {
                    col *= d[j];
                }
                Dense(m)
            }
            (Dense(a), Dense(b)) => Dense(a * b),
        }
    }

    pub fn scale(&self, c: Complex64) -> OpValue {
        self.compose(&OpValue::Scalar(c))
    }

    /// `self + other`; `n` is needed only when mixing structures.
    pub fn add(&self, other: &OpValue, n: usize) -> OpValue {
        use OpValue::*;
        match (self, other) {
            (Scalar(a), Scalar(b)) => Scalar(a + b),
            (Diagonal(a), Diagonal(b)) => Diagonal(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            (Scalar(a), Diagonal(d)) | (Diagonal(d), Scalar(a)) => Diagonal(d.iter().map(|x| a + x).collect()),
            _ => Dense(self.to_dense(n) + other.to_dense(n)),
        }
    }

    /// Operator norm on `l_q^n`.
    ///
    /// Exact for scalars, diagonals and `q = 2`. Otherwise a power-iteration
    /// estimate, which never exceeds the true norm.
    pub fn opnorm(&self, q: f64) -> f64 {
        match self {
            OpValue::Scalar(c) => c.norm(),
            OpValue::Diagonal(d) => d.iter().fold(0.0, |m, z| m.max(z.norm())),
            OpValue::Dense(m) => {
                if m.is_empty() {
                    0.0
                } else if q == 2.0 {
                    m.clone().svd(false, false).singular_values.max()
                } else {
                    power_norm(m, q)
                }
            }
        }
    }
}

/// Duality map of `l_q`: the unit vector in `l_q'` norming `y`.
fn dual_vector(y: &[Complex64], q: f64) -> Vec<Complex64> {
    let n = lq_norm(y, q);
    if n == 0.0 {
        return vec![ZERO; y.len()];
    }
    y.iter()
        .map(|z| {
            let r = z.norm();
            if r == 0.0 {
                ZERO
            } else {
                Complex64::from_polar((r / n).powf(q - 1.0), z.arg())
            }
        })
        .collect()
}

/// Boyd's power method for `||M||_{q -> q}` from several starting vectors.
fn power_norm(m: &DMatrix<Complex64>, q: f64) -> f64 {
    let n = m.ncols();
    let qd = q / (q - 1.0);
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        (0..m.nrows()).map(|i| (0..n).map(|j| m[(i, j)] * x[j]).sum()).collect()
    };
    let apply_adj = |y: &[Complex64]| -> Vec<Complex64> {
        (0..n).map(|j| (0..m.nrows()).map(|i| m[(i, j)].conj() * y[i]).sum()).collect()
    };
    let mut best = 0.0f64;
    let mut starts: Vec<Vec<Complex64>> = (0..n)
        .map(|k| {
            let mut e = vec![ZERO; n];
            e[k] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    starts.push(vec![Complex64::new(1.0, 0.0); n]);
    starts.push((0..n).map(|k| Complex64::from_polar(1.0, 0.7 * k as f64 + 0.3)).collect());
    for start in starts {
        let mut x = start;
        let nx = lq_norm(&x, q);
        x.iter_mut().for_each(|z| *z /= nx);
        for _ in 0..100 {
            let y = apply(&x);
            let est = lq_norm(&y, q);
            if est == 0.0 {
                break;
            }
            let improved = est > best * (1.0 + 1e-13);
            best = best.max(est);
            let z = apply_adj(&dual_vector(&y, q));
            let next = dual_vector(&z, qd);
            if lq_norm(&next, q) == 0.0 {
                break;
            }
            if !improved && next.iter().zip(&x).all(|(a, b)| (a - b).norm() < 1e-14) {
                break;
            }
            x = next;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn compose_matches_dense_product() {
        let d = OpValue::Diagonal(vec![c(1.0, 1.0), c(2.0, 0.0)]);
        let m = OpValue::Dense(DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0), c(3.0, 0.0)]));
        for (a, b) in [(&d, &m), (&m, &d), (&m, &m), (&d, &d)] {
            let want = a.to_dense(2) * b.to_dense(2);
            assert_eq!(a.compose(b).to_dense(2), want);
        }
    }

    #[test]
    fn power_norm_agrees_with_svd_at_q2() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0), c(3.0, -1.0)]);
        let exact = OpValue::Dense(m.clone()).opnorm(2.0);
        assert!((power_norm(&m, 2.0) - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn l1_like_norm_is_max_column_sum() {
        // q close to 1 pushes the norm toward the max absolute column sum
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(-2.0, 0.0), c(3.0, 0.0), c(1.0, 0.0)]);
        let est = OpValue::Dense(m).opnorm(1.0001);
        assert!((est - 4.0).abs() < 1e-2, "{est}");
    }
}
