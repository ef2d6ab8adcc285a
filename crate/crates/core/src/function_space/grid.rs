use crate::error::{Error, Result};

/// Periodic tensor grid on the torus `[-L_1, L_1) x ... x [-L_n, L_n)`.
///
/// Point `j` on axis `k` sits at `-L_k + j * 2 L_k / m_k`. The frequency
/// attached to DFT bin `j` is `pi * j' / L_k` with `j'` the signed index
/// (`j' = j - m_k` for `j >= m_k / 2`, so the Nyquist bin is negative).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    extents: Vec<f64>,
    sizes: Vec<usize>,
}

impl Grid {
    pub fn new(extents: Vec<f64>, sizes: Vec<usize>) -> Result<Self> {
        if extents.is_empty() || extents.len() > 3 {
            return Err(Error::InvalidInput(format!(
                "grid dimension must be 1..=3, got {}",
                extents.len()
            )));
        }
        if extents.len() != sizes.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} sizes", extents.len()),
                found: format!("{} sizes", sizes.len()),
            });
        }
        for (k, &l) in extents.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidInput(format!("extent L_{k} must be finite and > 0, got {l}")));
            }
        }
        for (k, &m) in sizes.iter().enumerate() {
            if m < 4 || !m.is_power_of_two() {
                return Err(Error::InvalidInput(format!(
                    "size m_{k} must be a power of two >= 4, got {m}"
                )));
            }
        }
        Ok(Grid { extents, sizes })
    }

    /// Same half-width and point count on every axis.
    pub fn cube(n: usize, extent: f64, size: usize) -> Result<Self> {
        Grid::new(vec![extent; n], vec![size; n])
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.extents[axis] / self.sizes[axis] as f64
    }

    /// Riemann-sum cell volume `prod 2 L_k / m_k`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).product()
    }

    /// Volume of the whole torus.
    pub fn volume(&self) -> f64 {
        self.extents.iter().map(|l| 2.0 * l).product()
    }

    /// Coordinates of grid points along one axis.
    pub fn axis_points(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        let l = self.extents[axis];
        (0..self.sizes[axis]).map(|j| -l + j as f64 * h).collect()
    }

    /// Points shifted by half a cell; used to sample weights away from the origin.
    pub fn axis_midpoints(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        self.axis_points(axis).into_iter().map(|x| x + 0.5 * h).collect()
    }

    /// Signed DFT index of bin `j` on an axis of size `m`.
    pub fn signed_index(j: usize, m: usize) -> i64 {
        if j < m / 2 {
            j as i64
        } else {
            j as i64 - m as i64
        }
    }

    /// Frequencies attached to the DFT bins of one axis, in bin order.
    pub fn axis_frequencies(&self, axis: usize) -> Vec<f64> {
        let m = self.sizes[axis];
        let scale = std::f64::consts::PI / self.extents[axis];
        (0..m).map(|j| Grid::signed_index(j, m) as f64 * scale).collect()
    }

    /// Bin index of the Nyquist frequency on every axis.
    pub fn nyquist_bin(&self, axis: usize) -> usize {
        self.sizes[axis] / 2
    }

    /// Row-major multi-index of a flat point index (axis 0 slowest).
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = flat % self.sizes[k];
            flat /= self.sizes[k];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.sizes).fold(0, |acc, (&i, &m)| acc * m + i)
    }

    /// Physical coordinates of every grid point, flat row-major order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|k| self.axis_points(k)).collect();
        self.tensor(&axes)
    }

    /// Frequency vectors of every DFT bin, flat row-major order.
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|k| self.axis_frequencies(k)).collect();
        self.tensor(&axes)
    }

    fn tensor(&self, axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|flat| {
                self.unravel(flat)
                    .iter()
                    .enumerate()
                    .map(|(k, &j)| axes[k][j])
                    .collect()
            })
            .collect()
    }

    /// Grid with every axis refined by `factor` (a power of two).
    pub fn refined(&self, factor: usize) -> Result<Grid> {
        Grid::new(
            self.extents.clone(),
            self.sizes.iter().map(|m| m * factor).collect(),
        )
    }
}

/// Truncated sequence space `l_q` of dimension `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueSpace {
    dim: usize,
    q: f64,
}

impl ValueSpace {
    pub fn new(dim: usize, q: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("value space dimension must be >= 1".into()));
        }
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::InvalidInput(format!("exponent q must lie in (1, inf), got {q}")));
        }
        Ok(ValueSpace { dim, q })
    }

    pub fn scalar() -> Self {
        ValueSpace { dim: 1, q: 2.0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `l_q` norm of a complex vector.
    pub fn norm(&self, v: &[num_complex::Complex64]) -> f64 {
        lq_norm(v, self.q)
    }
}

pub fn lq_norm(v: &[num_complex::Complex64], q: f64) -> f64 {
    if q == 2.0 {
        return v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    let m = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if m == 0.0 {
        return 0.0;
    }
    m * v.iter().map(|z| (z.norm() / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Multi-index `alpha = (alpha_1, ..., alpha_n)` of derivative orders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// `order` along `axis`, zero elsewhere.
    pub fn axis(n: usize, axis: usize, order: u32) -> Self {
        let mut a = vec![0; n];
        a[axis] = order;
        MultiIndex(a)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// All multi-indices of dimension `n` with total order exactly `order`.
    pub fn of_order(n: usize, order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        fn rec(k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if k + 1 == cur.len() {
                cur[k] = left;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for a in (0..=left).rev() {
                cur[k] = a;
                rec(k + 1, left - a, cur, out);
            }
        }
        if n > 0 {
            rec(0, order, &mut cur, &mut out);
        }
        out
    }

    /// All multi-indices with total order `<= order`, sorted by order.
    pub fn up_to_order(n: usize, order: u32) -> Vec<MultiIndex> {
        (0..=order).flat_map(|k| MultiIndex::of_order(n, k)).collect()
    }

    /// The `2^n` indices with entries in `{0, 1}`.
    pub fn binary(n: usize) -> Vec<MultiIndex> {
        (0..1u32 << n)
            .map(|mask| MultiIndex((0..n).map(|k| (mask >> k) & 1).collect()))
            .collect()
    }
}

/// Anisotropy vector `l = (l_1, ..., l_n)` with `|alpha : l| = sum alpha_k / l_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Anisotropy(Vec<u32>);

impl Anisotropy {
    pub fn new(l: Vec<u32>) -> Result<Self> {
        if l.is_empty() || l.contains(&0) {
            return Err(Error::InvalidInput(format!("anisotropy entries must be >= 1, got {l:?}")));
        }
        Ok(Anisotropy(l))
    }

    pub fn orders(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `kappa(alpha) = sum alpha_k / l_k`.
    pub fn kappa(&self, alpha: &MultiIndex) -> f64 {
        alpha
            .0
            .iter()
            .zip(&self.0)
            .map(|(&a, &l)| a as f64 / l as f64)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(vec![1.0], vec![6]).is_err());
        assert!(Grid::new(vec![1.0], vec![2]).is_err());
        assert!(Grid::new(vec![0.0], vec![8]).is_err());
        assert!(Grid::new(vec![1.0; 4], vec![8; 4]).is_err());
        assert!(Grid::new(vec![1.0, 2.0], vec![8, 16]).is_ok());
    }

    #[test]
    fn frequency_lattice_is_symmetric_up_to_nyquist() {
        let g = Grid::new(vec![std::f64::consts::PI], vec![8]).unwrap();
        let f = g.axis_frequencies(0);
        assert_eq!(f, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn ravel_roundtrip() {
        let g = Grid::new(vec![1.0, 1.0, 1.0], vec![4, 8, 16]).unwrap();
        for flat in [0, 1, 17, 511] {
            assert_eq!(g.ravel(&g.unravel(flat)), flat);
        }
    }

    #[test]
    fn kappa_is_additive() {
        let l = Anisotropy::new(vec![2, 4]).unwrap();
        let a = MultiIndex(vec![1, 0]);
        let b = MultiIndex(vec![0, 1]);
        assert_eq!(l.kappa(&MultiIndex::zero(2)), 0.0);
        assert!((l.kappa(&a.add(&b)) - l.kappa(&a) - l.kappa(&b)).abs() < 1e-15);
        assert!((l.kappa(&MultiIndex(vec![1, 1])) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(MultiIndex::of_order(2, 2).len(), 3);
        assert_eq!(MultiIndex::up_to_order(2, 2).len(), 6);
        assert_eq!(MultiIndex::binary(3).len(), 8);
        assert!(Anisotropy::new(vec![0]).is_err());
    }

    #[test]
    fn lq_norm_values() {
        use num_complex::Complex64 as C;
        let v = [C::new(3.0, 0.0), C::new(0.0, 4.0)];
        assert!((lq_norm(&v, 2.0) - 5.0).abs() < 1e-14);
        assert!((lq_norm(&v, 3.0) - (27.0f64 + 64.0).cbrt()).abs() < 1e-13);
    }
}
