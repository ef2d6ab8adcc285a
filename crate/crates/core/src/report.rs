//! Estimate reports: one row per evaluated instance of an inequality.

/// One instance: swept parameters, both sides, and their ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub params: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Rows of an a-priori estimate plus the empirical constant (max ratio).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimateReport {
    pub param_names: Vec<String>,
    pub rows: Vec<EstimateRow>,
    /// Instances left out because both sides vanish.
    pub skipped: usize,
}

impl EstimateReport {
    pub fn new(param_names: &[&str]) -> Self {
        EstimateReport { param_names: param_names.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), skipped: 0 }
    }

    /// Record `lhs <= C rhs`; a zero right-hand side is skipped.
    pub fn push(&mut self, params: Vec<f64>, lhs: f64, rhs: f64) {
        debug_assert_eq!(params.len(), self.param_names.len());
        if rhs == 0.0 {
            self.skipped += 1;
            return;
        }
        self.rows.push(EstimateRow { params, lhs, rhs, ratio: lhs / rhs });
    }

    pub fn merge(&mut self, other: EstimateReport) {
        self.rows.extend(other.rows);
        self.skipped += other.skipped;
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    fn column(&self, name: &str) -> usize {
        self.param_names.iter().position(|n| n == name).unwrap_or_else(|| panic!("no parameter named {name}"))
    }

    /// Max ratio over rows whose parameter `name` equals `value`.
    pub fn max_ratio_where(&self, name: &str, value: f64) -> f64 {
        let c = self.column(name);
        self.rows.iter().filter(|r| r.params[c] == value).map(|r| r.ratio).fold(0.0, f64::max)
    }

    /// `(value, max ratio)` for each distinct value of parameter `name`, in first-seen order.
    pub fn group_max(&self, name: &str) -> Vec<(f64, f64)> {
        let c = self.column(name);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(v, _)| *v == r.params[c]) {
                Some(entry) => entry.1 = entry.1.max(r.ratio),
                None => out.push((r.params[c], r.ratio)),
            }
        }
        out
    }

    /// `max / min` of the grouped maxima: 1 for perfectly uniform estimates.
    pub fn spread(&self, name: &str) -> f64 {
        let g = self.group_max(name);
        let hi = g.iter().map(|x| x.1).fold(0.0, f64::max);
        let lo = g.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        hi / lo
    }

    /// Header, one line per row, and a closing `max` line carrying the
    /// largest ratio. Columns: parameters, then `lhs,rhs,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for name in &self.param_names {
            out.push_str(name);
            out.push(',');
        }
        out.push_str("lhs,rhs,ratio\n");
        for r in &self.rows {
            for &v in &r.params {
                out.push_str(&format_number(v));
                out.push(',');
            }
            out.push_str(&format!("{},{},{}\n", format_number(r.lhs), format_number(r.rhs), format_number(r.ratio)));
        }
        out.push_str("max");
        for _ in 0..self.param_names.len() + 1 {
            out.push(',');
        }
        out.push_str(&format!(",{}\n", format_number(self.max_ratio())));
        out
    }
}

/// Integers print plainly; everything else in shortest round-trip exponent form.
pub fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregation() {
        let mut r = EstimateReport::new(&["lambda", "k"]);
        r.push(vec![1.0, 0.0], 2.0, 1.0);
        r.push(vec![10.0, 0.0], 3.0, 1.0);
        r.push(vec![1.0, 1.0], 4.0, 1.0);
        r.push(vec![10.0, 1.0], 0.0, 0.0);
        assert_eq!(r.skipped, 1);
        assert_eq!(r.max_ratio(), 4.0);
        assert_eq!(r.group_max("lambda"), vec![(1.0, 4.0), (10.0, 3.0)]);
        assert!((r.spread("lambda") - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let mut r = EstimateReport::new(&["mu", "h"]);
        r.push(vec![0.5, 0.001], 3.0, 2.0);
        assert_eq!(r.to_csv(), "mu,h,lhs,rhs,ratio\n5e-1,1e-3,3,2,1.5e0\nmax,,,,1.5e0\n");
        assert_eq!(format_number(f64::INFINITY), "inf");
    }
}
