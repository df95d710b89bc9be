//! Chebyshev-basis series on `[-1, 1]` and the nodal geometry of `T_n`.
//!
//! Roots of `T_n` are stored in ascending order, `r_k = -cos(pi (2k-1) / 2n)`
//! for `k = 1..=n`, so that nodal interval `I_k = [r_k, r_{k+1}]` and group
//! interval `G_k = [r_{4k-3}, r_{4k+1}]` are numbered left to right. The raw
//! values `cos(pi (2k-1) / 2n)` run right to left; `r_k` equals the raw value
//! with index `n + 1 - k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Relative size below which trailing coefficients are dropped by [`ChebSeries::trim`].
pub const DROP_TOLERANCE: f64 = 1e-14;

/// A real polynomial `sum_k c_k T_k(x)` on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebSeries {
    coeffs: Vec<f64>,
}

/// Value of a series together with whether `x` was outside `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebEval {
    pub value: f64,
    pub extrapolated: bool,
}

impl ChebSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("series needs at least one coefficient"));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!("coefficient {i} is not finite")));
        }
        Ok(Self { coeffs })
    }

    /// The basis polynomial `T_k`.
    pub fn basis(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Self { coeffs }
    }

    pub fn constant(v: f64) -> Self {
        Self { coeffs: vec![v] }
    }

    /// Converts monomial coefficients `a_0 + a_1 x + ...` to the Chebyshev basis.
    pub fn from_monomial(monomial: &[f64]) -> Result<Self> {
        if monomial.is_empty() {
            return Ok(Self::constant(0.0));
        }
        let x = Self::basis(1);
        let mut acc = Self::constant(*monomial.last().unwrap());
        for &a in monomial.iter().rev().skip(1) {
            acc = acc.mul(&x);
            acc.coeffs[0] += a;
        }
        Self::new(acc.coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Drops trailing coefficients below `DROP_TOLERANCE * max|c|`.
    pub fn trim(&self) -> Self {
        let max = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let cutoff = DROP_TOLERANCE * max;
        let mut len = self.coeffs.len();
        while len > 1 && self.coeffs[len - 1].abs() <= cutoff {
            len -= 1;
        }
        Self {
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let c = &self.coeffs;
        if c.len() == 1 {
            return c[0];
        }
        let two_x = 2.0 * x;
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in c[1..].iter().rev() {
            let b0 = ck + two_x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        c[0] + x * b1 - b2
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn derivative(&self) -> Self {
        let c = &self.coeffs;
        let d = c.len() - 1;
        if d == 0 {
            return Self::constant(0.0);
        }
        let mut out = vec![0.0; d];
        // d_{k-1} = d_{k+1} + 2k c_k, then halve d_0.
        for k in (1..=d).rev() {
            let next = if k + 1 <= d - 1 { out[k + 1] } else { 0.0 };
            out[k - 1] = next + 2.0 * k as f64 * c[k];
        }
        out[0] *= 0.5;
        Self { coeffs: out }
    }

    /// The antiderivative `Q` with `Q(anchor_x) = anchor_value`.
    pub fn antiderivative(&self, anchor_x: f64, anchor_value: f64) -> Self {
        let c = &self.coeffs;
        let d = c.len() - 1;
        let at = |k: usize| c.get(k).copied().unwrap_or(0.0);
        let mut out = vec![0.0; d + 2];
        out[1] = at(0) - 0.5 * at(2);
        for k in 2..=d + 1 {
            out[k] = (at(k - 1) - at(k + 1)) / (2.0 * k as f64);
        }
        let mut q = Self { coeffs: out };
        let shift = anchor_value - q.eval(anchor_x);
        q.coeffs[0] += shift;
        q
    }

    /// `int_a^b` of the series, through its antiderivative.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        integrate_over(self, a, b)
    }

    /// Product via `T_m T_n = (T_{m+n} + T_{|m-n|}) / 2`.
    pub fn mul(&self, other: &Self) -> Self {
        let (p, q) = (&self.coeffs, &other.coeffs);
        let mut out = vec![0.0; p.len() + q.len() - 1];
        for (i, &a) in p.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in q.iter().enumerate() {
                let h = 0.5 * a * b;
                out[i + j] += h;
                out[i.abs_diff(j)] += h;
            }
        }
        Self { coeffs: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(0.0) + other.coeffs.get(k).copied().unwrap_or(0.0)
            })
            .collect();
        Self { coeffs }
    }
}

/// Checked evaluation: rejects non-finite `x` and flags extrapolation.
pub fn cheb_eval(series: &ChebSeries, x: f64) -> Result<ChebEval> {
    if !x.is_finite() {
        return Err(invalid("evaluation point is not finite"));
    }
    Ok(ChebEval {
        value: series.eval(x),
        extrapolated: !(-1.0..=1.0).contains(&x),
    })
}

/// Chebyshev extreme points `cos(pi j / d)` for `j = 0..=d`, from `1` down to `-1`.
pub fn extreme_points(d: usize) -> Vec<f64> {
    if d == 0 {
        return vec![1.0];
    }
    // sin form keeps the points exactly antisymmetric.
    (0..=d)
        .map(|j| (PI * (d as f64 - 2.0 * j as f64) / (2.0 * d as f64)).sin())
        .collect()
}

/// Interpolates samples taken at [`extreme_points`]`(values.len() - 1)`.
///
/// Direct `O(d^2)` cosine transform.
pub fn cheb_interpolate(values: &[f64]) -> Result<ChebSeries> {
    if values.len() < 2 {
        return Err(invalid("interpolation needs at least two samples"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("interpolation sample is not finite"));
    }
    let d = values.len() - 1;
    let m = 2 * d;
    let cos_table: Vec<f64> = (0..m).map(|i| (PI * i as f64 / d as f64).cos()).collect();
    let mut weighted = values.to_vec();
    weighted[0] *= 0.5;
    weighted[d] *= 0.5;
    let scale = 2.0 / d as f64;
    let mut coeffs: Vec<f64> = (0..=d)
        .map(|k| {
            let mut s = 0.0;
            let mut idx = 0usize;
            for &v in &weighted {
                s += v * cos_table[idx];
                idx += k;
                if idx >= m {
                    idx -= m;
                }
            }
            s * scale
        })
        .collect();
    coeffs[0] *= 0.5;
    coeffs[d] *= 0.5;
    ChebSeries::new(coeffs)
}

/// Antiderivative anchored at `(anchor_x, anchor_value)`.
pub fn cheb_antiderivative(series: &ChebSeries, anchor_x: f64, anchor_value: f64) -> Result<ChebSeries> {
    if !anchor_x.is_finite() || !anchor_value.is_finite() {
        return Err(invalid("anchor is not finite"));
    }
    Ok(series.antiderivative(anchor_x, anchor_value))
}

/// `int_a^b series` for `-1 <= a <= b <= 1`.
pub fn integrate_over(series: &ChebSeries, a: f64, b: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(invalid("integration bounds are not finite"));
    }
    if a > b {
        return Err(invalid(format!("integration bounds reversed: {a} > {b}")));
    }
    const SLACK: f64 = 1e-14;
    if a < -1.0 - SLACK || b > 1.0 + SLACK {
        return Err(invalid(format!("integration range [{a}, {b}] leaves [-1, 1]")));
    }
    let q = series.antiderivative(a, 0.0);
    Ok(q.eval(b))
}

/// Roots, nodal intervals and (for `n = 8m + 1`) group intervals of `T_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalGrid {
    n: usize,
    roots: Vec<f64>,
    lengths: Vec<f64>,
    group_count: Option<usize>,
}

impl NodalGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Ascending roots `r_1 < ... < r_n`, 0-based storage.
    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    /// `r_k` with the 1-based index used throughout.
    pub fn root(&self, k: usize) -> f64 {
        self.roots[k - 1]
    }

    /// `|I_k|` for `k = 1..n-1`, as `2 sin(pi k / n) sin(pi / 2n)`.
    pub fn interval_length(&self, k: usize) -> f64 {
        self.lengths[k - 1]
    }

    pub fn interval_lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn interval(&self, k: usize) -> (f64, f64) {
        (self.root(k), self.root(k + 1))
    }

    pub fn interval_count(&self) -> usize {
        self.n - 1
    }

    /// `J_k = [pi (2k-1) / 2n, pi (2k+1) / 2n]`.
    pub fn angular_interval(&self, k: usize) -> (f64, f64) {
        let n = self.n as f64;
        let k = k as f64;
        (PI * (2.0 * k - 1.0) / (2.0 * n), PI * (2.0 * k + 1.0) / (2.0 * n))
    }

    pub fn has_groups(&self) -> bool {
        self.group_count.is_some()
    }

    /// `N = (n - 1) / 4`, present only when `n = 1 (mod 8)`.
    pub fn group_count(&self) -> Option<usize> {
        self.group_count
    }

    pub(crate) fn require_groups(&self) -> Result<usize> {
        self.group_count
            .ok_or_else(|| invalid(format!("degree {} is not of the form 8m + 1", self.n)))
    }

    /// `G_k = [r_{4k-3}, r_{4k+1}]`.
    pub fn group(&self, k: usize) -> (f64, f64) {
        (self.root(4 * k - 3), self.root(4 * k + 1))
    }

    pub fn group_length(&self, k: usize) -> f64 {
        self.root_gap(4 * k - 3, 4 * k + 1)
    }

    /// Group endpoints `r_1, r_5, ..., r_n`.
    pub fn group_endpoints(&self) -> Vec<f64> {
        self.roots.iter().step_by(4).copied().collect()
    }

    pub fn groups(&self) -> Vec<(f64, f64)> {
        match self.group_count {
            Some(count) => (1..=count).map(|k| self.group(k)).collect(),
            None => Vec::new(),
        }
    }

    pub fn max_group_length(&self) -> f64 {
        (1..=self.group_count.unwrap_or(0))
            .map(|k| self.group_length(k))
            .fold(0.0, f64::max)
    }

    /// `r_m - r_l` for `l <= m`, from the sine difference formula.
    pub fn root_gap(&self, l: usize, m: usize) -> f64 {
        let n = self.n as f64;
        let (l, m) = (l as f64, m as f64);
        2.0 * (PI * (m + l - 1.0 - n) / (2.0 * n)).cos() * (PI * (m - l) / (2.0 * n)).sin()
    }

    /// `dist(I_k, I_{k+j})` from explicit cosine endpoints; zero for `|j| <= 1`.
    pub fn interval_distance(&self, k: usize, j: isize) -> f64 {
        let other = (k as isize + j) as usize;
        let (lo, hi) = if j >= 0 { (k, other) } else { (other, k) };
        if hi <= lo + 1 {
            return 0.0;
        }
        self.root_gap(lo + 1, hi)
    }
}

/// Builds the grid for `T_n`, `n >= 2`.
pub fn build_grid(n: usize) -> Result<NodalGrid> {
    if n < 2 {
        return Err(invalid(format!("grid degree must be at least 2, got {n}")));
    }
    let nf = n as f64;
    let roots = (1..=n)
        .map(|k| (PI * (2.0 * k as f64 - 1.0 - nf) / (2.0 * nf)).sin())
        .collect();
    let half_step = (PI / (2.0 * nf)).sin();
    let lengths = (1..n)
        .map(|k| {
            let kk = k.min(n - k) as f64;
            2.0 * (PI * kk / nf).sin() * half_step
        })
        .collect();
    let group_count = (n % 8 == 1).then_some((n - 1) / 4);
    Ok(NodalGrid {
        n,
        roots,
        lengths,
        group_count,
    })
}

/// `|I_k| / dist(I_k, I_{k+j})`, bounded by `16 / (|j| - 1)`.
pub fn interval_distance_ratio(grid: &NodalGrid, k: usize, j: isize) -> Result<f64> {
    let last = grid.interval_count() as isize;
    let other = k as isize + j;
    if k == 0 || k as isize > last || other < 1 || other > last {
        return Err(invalid(format!("interval pair ({k}, {other}) out of range 1..={last}")));
    }
    if j.abs() <= 1 {
        return Err(invalid("adjacent or identical intervals have zero distance"));
    }
    Ok(grid.interval_length(k) / grid.interval_distance(k, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn monomial_t3(x: f64) -> f64 {
        4.0 * x * x * x - 3.0 * x
    }

    #[test]
    fn eval_basis_values() {
        let t3 = ChebSeries::basis(3);
        assert_eq!(t3.eval(1.0), 1.0);
        assert_abs_diff_eq!(t3.eval(0.3), monomial_t3(0.3), epsilon = 1e-15);
        assert_abs_diff_eq!(t3.eval(0.3), -0.792, epsilon = 1e-15);
        let t5 = ChebSeries::basis(5);
        assert_abs_diff_eq!(t5.eval((PI / 10.0).cos()), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn checked_eval_flags_extrapolation() {
        let s = ChebSeries::basis(2);
        let inside = cheb_eval(&s, 0.5).unwrap();
        assert!(!inside.extrapolated);
        let outside = cheb_eval(&s, 1.5).unwrap();
        assert!(outside.extrapolated);
        assert_abs_diff_eq!(outside.value, 2.0 * 2.25 - 1.0, epsilon = 1e-14);
        assert!(cheb_eval(&s, f64::NAN).is_err());
        assert!(ChebSeries::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn interpolate_reproduces_basis() {
        let pts = extreme_points(7);
        let vals: Vec<f64> = pts.iter().map(|&x| ChebSeries::basis(7).eval(x)).collect();
        let s = cheb_interpolate(&vals).unwrap();
        for (k, c) in s.coeffs().iter().enumerate() {
            let expect = if k == 7 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(*c, expect, epsilon = 1e-13);
        }
    }

    #[test]
    fn interpolate_constant_and_quintic() {
        let s = cheb_interpolate(&[2.5; 6]).unwrap();
        assert_abs_diff_eq!(s.coeffs()[0], 2.5, epsilon = 1e-15);
        assert!(s.coeffs()[1..].iter().all(|c| c.abs() < 1e-15));

        let pts = extreme_points(5);
        let vals: Vec<f64> = pts.iter().map(|x| x.powi(5)).collect();
        let s = cheb_interpolate(&vals).unwrap();
        let expect = [0.0, 10.0 / 16.0, 0.0, 5.0 / 16.0, 0.0, 1.0 / 16.0];
        for (c, e) in s.coeffs().iter().zip(expect) {
            assert_abs_diff_eq!(*c, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn interpolate_rejects_short_input() {
        assert!(cheb_interpolate(&[1.0]).is_err());
        assert!(cheb_interpolate(&[]).is_err());
    }

    #[test]
    fn antiderivative_examples() {
        let one = ChebSeries::constant(1.0);
        let q = cheb_antiderivative(&one, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(q.coeffs()[0], 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(q.coeffs()[1], 1.0, epsilon = 1e-16);

        // x^2 / 2 = (T_0 + T_2) / 4
        let q = cheb_antiderivative(&ChebSeries::basis(1), 0.0, 0.0).unwrap();
        let expect = ChebSeries::from_monomial(&[0.0, 0.0, 0.5]).unwrap();
        for (a, b) in q.coeffs().iter().zip(expect.coeffs()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-16);
        }
        assert_abs_diff_eq!(q.eval(0.0), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn derivative_inverts_antiderivative() {
        let t6 = ChebSeries::basis(6);
        let back = t6.antiderivative(0.3, 1.7).derivative();
        for i in 0..20 {
            let x = -1.0 + 2.0 * (i as f64 + 0.37) / 20.0;
            assert_abs_diff_eq!(back.eval(x), t6.eval(x), epsilon = 1e-12);
        }
        let q = t6.antiderivative(0.3, 1.7);
        assert_abs_diff_eq!(q.eval(0.3), 1.7, epsilon = 1e-14);
    }

    #[test]
    fn derivative_of_monomials() {
        let p = ChebSeries::from_monomial(&[1.0, -2.0, 0.5, 3.0]).unwrap();
        let dp = p.derivative();
        for &x in &[-0.9, -0.2, 0.4, 1.0] {
            assert_abs_diff_eq!(dp.eval(x), -2.0 + x + 9.0 * x * x, epsilon = 1e-13);
        }
    }

    #[test]
    fn integrals() {
        assert_abs_diff_eq!(integrate_over(&ChebSeries::constant(1.0), -1.0, 1.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(integrate_over(&ChebSeries::basis(2), -1.0, 1.0).unwrap(), -2.0 / 3.0, epsilon = 1e-15);
        assert!(integrate_over(&ChebSeries::basis(2), 0.5, 0.1).is_err());
        assert!(integrate_over(&ChebSeries::basis(2), -1.5, 0.1).is_err());
    }

    #[test]
    fn node_area_per_length() {
        for n in [9usize, 33, 105] {
            let grid = build_grid(n).unwrap();
            let tn = ChebSeries::basis(n);
            let upper = 2.0 / PI + PI / (6.0 * (n * n) as f64);
            for k in 1..n {
                let (a, b) = grid.interval(k);
                let avg = integrate_over(&tn, a, b).unwrap().abs() / grid.interval_length(k);
                assert!(avg >= 2.0 / PI - 1e-12 && avg <= upper + 1e-12, "n={n} k={k} avg={avg}");
            }
        }
    }

    #[test]
    fn product_identity() {
        let p = ChebSeries::basis(5).mul(&ChebSeries::basis(3));
        let expect = ChebSeries::basis(8).scale(0.5).add(&ChebSeries::basis(2).scale(0.5));
        for (a, b) in p.coeffs().iter().zip(expect.coeffs()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn trim_drops_noise() {
        let s = ChebSeries::new(vec![1.0, 0.5, 1e-16, -1e-17]).unwrap().trim();
        assert_eq!(s.degree(), 1);
        assert_eq!(ChebSeries::constant(0.0).trim().degree(), 0);
    }

    #[test]
    fn grid_n9() {
        let g = build_grid(9).unwrap();
        assert_abs_diff_eq!(g.root(1), -0.984_807_753_012_208, epsilon = 1e-15);
        assert_abs_diff_eq!(g.root(1), -(PI / 18.0).cos(), epsilon = 1e-15);
        assert_eq!(g.root(5), 0.0);
        assert_eq!(g.group_count(), Some(2));
        assert_eq!(g.group(1), (g.root(1), g.root(5)));
        assert_eq!(g.group(2), (g.root(5), g.root(9)));
        for k in 1..=9 {
            let raw = (PI * (2.0 * (10 - k) as f64 - 1.0) / 18.0).cos();
            assert_abs_diff_eq!(g.root(k), raw, epsilon = 1e-15);
        }
    }

    #[test]
    fn grid_rejects_small_degree() {
        assert!(build_grid(1).is_err());
        assert!(build_grid(2).is_ok());
        assert!(!build_grid(10).unwrap().has_groups());
    }

    #[test]
    fn grid_length_estimate_n33() {
        let g = build_grid(33).unwrap();
        let len = g.interval_length(1);
        assert!(len >= 4.0 / 1089.0 && len <= PI * PI / 1089.0);
        let (a, b) = g.interval(1);
        assert_abs_diff_eq!(len, b - a, epsilon = 1e-15);
    }

    #[test]
    fn grid_origin_is_shared_group_endpoint() {
        for n in [9usize, 17, 33, 105, 201] {
            let g = build_grid(n).unwrap();
            let half = g.group_count().unwrap() / 2;
            assert_eq!(g.group(half).1, 0.0);
            assert_eq!(g.group(half + 1).0, 0.0);
        }
    }

    #[test]
    fn distance_ratio_examples() {
        let g = build_grid(101).unwrap();
        let r = interval_distance_ratio(&g, 25, 10).unwrap();
        assert!(r <= 16.0 / 9.0);

        let g = build_grid(33).unwrap();
        // endpoint arithmetic oracle
        let direct = g.interval_length(5) / (g.root(8) - g.root(6));
        assert_abs_diff_eq!(interval_distance_ratio(&g, 5, 3).unwrap(), direct, epsilon = 1e-13);
        assert_abs_diff_eq!(interval_distance_ratio(&g, 5, 3).unwrap(), 0.395_431_998_067_070_9, epsilon = 1e-12);

        for k in 1..33usize {
            let sym = 33 - k;
            for j in [-4isize, -2, 2, 5] {
                let other = k as isize + j;
                if other < 1 || other > 32 {
                    continue;
                }
                let formula = g.interval_distance(k, j);
                let (lo, hi) = if j > 0 { (k, other as usize) } else { (other as usize, k) };
                let direct = g.root(hi) - g.root(lo + 1);
                assert_abs_diff_eq!(formula, direct, epsilon = 1e-14);
                let mirrored = g.interval_distance(sym, -j);
                assert_abs_diff_eq!(formula, mirrored, epsilon = 1e-14);
            }
        }
        assert!(interval_distance_ratio(&g, 5, 1).is_err());
        assert!(interval_distance_ratio(&g, 5, 0).is_err());
        assert!(interval_distance_ratio(&g, 31, 5).is_err());
    }
}
