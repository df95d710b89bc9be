//! Three-point root perturbations of `T_n` and the polynomial they produce.
//!
//! Inside group `G_k` the interior roots `r_{4k-2}, r_{4k-1}, r_{4k}` (left,
//! center, right) move by `delta h`, `-(y + delta) h` and `y h`, where
//! `h = |I_{4k-1}|`. After the affine rescale sending the center root to `0`
//! and the right root to `1`, the left root sits at `-a` with
//! `a = |I_{4k-2}| / |I_{4k-1}|`, and the move reads
//! `{-a, 0, 1} -> {-a + delta, -delta - eps, 1 + eps}`. Choosing `delta` to
//! kill the linear term of the numerator makes the distortion
//! `R(x) = 1 + C / ((x + a) x (x - 1))`, which decays cubically.

use serde::{Deserialize, Serialize};

use crate::cheb::{cheb_interpolate, extreme_points, ChebSeries, NodalGrid};
use crate::error::{invalid, Error, Result};

/// Residual accepted for `r_a(lambda) = eps`.
pub const DELTA_RESIDUAL_TOL: f64 = 1e-13;

/// Default cap `t` on perturbation factors.
pub const DEFAULT_T_CAP: f64 = 0.1;

/// Factors between binary-exponent renormalizations in product evaluation.
const RENORM_STRIDE: usize = 32;

/// Root of `r_a(lambda) = (a lambda - 1) / (lambda^2 + lambda + 1) = eps` and `delta = lambda eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSolution {
    pub lambda: f64,
    pub delta: f64,
}

fn r_a(a: f64, lambda: f64) -> f64 {
    (a * lambda - 1.0) / (lambda * lambda + lambda + 1.0)
}

fn r_a_slope(a: f64, lambda: f64) -> f64 {
    let q = lambda * lambda + lambda + 1.0;
    (a * q - (a * lambda - 1.0) * (2.0 * lambda + 1.0)) / (q * q)
}

/// Solves for the left-root shift that cancels the linear distortion term.
///
/// The root is searched in `[1/(2a), 2/a]` by bisection and polished by Newton.
pub fn solve_delta(epsilon: f64, a: f64) -> Result<DeltaSolution> {
    if !epsilon.is_finite() || !a.is_finite() || a <= 0.0 {
        return Err(invalid(format!("solve_delta needs finite eps and a > 0 (eps={epsilon}, a={a})")));
    }
    if epsilon == 0.0 {
        return Ok(DeltaSolution {
            lambda: 1.0 / a,
            delta: 0.0,
        });
    }
    let (mut lo, mut hi) = (0.5 / a, 2.0 / a);
    let h = |l: f64| r_a(a, l) - epsilon;
    let (h_lo, h_hi) = (h(lo), h(hi));
    if h_lo.signum() == h_hi.signum() {
        return Err(Error::SolverFailure(format!(
            "no root of r_a(lambda) = {epsilon} in [{lo}, {hi}] for a = {a}"
        )));
    }
    let rising = h_hi > h_lo;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (h(mid) > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..4 {
        let slope = r_a_slope(a, lambda);
        if slope == 0.0 {
            break;
        }
        let step = h(lambda) / slope;
        let next = lambda - step;
        if !(next > lo - (hi - lo) && next < hi + (hi - lo)) {
            break;
        }
        lambda = next;
        if step.abs() <= f64::EPSILON * lambda.abs() {
            break;
        }
    }
    let residual = h(lambda).abs();
    if residual > DELTA_RESIDUAL_TOL {
        return Err(Error::SolverFailure(format!(
            "r_a(lambda) residual {residual:e} above tolerance for eps={epsilon}, a={a}"
        )));
    }
    Ok(DeltaSolution {
        lambda,
        delta: lambda * epsilon,
    })
}

/// Two roots at `+-1` pushed to `+-(1 + eps)`: `1 - (2 eps + eps^2) / (x^2 - 1)`.
pub fn distortion_2pt(epsilon: f64, x: f64) -> Result<f64> {
    if !epsilon.is_finite() || !x.is_finite() {
        return Err(invalid("distortion_2pt needs finite input"));
    }
    let q = x * x - 1.0;
    if q == 0.0 {
        return Err(invalid(format!("x = {x} is a pole of the 2-point distortion")));
    }
    Ok(1.0 - (2.0 * epsilon + epsilon * epsilon) / q)
}

/// A solved three-point move of `{-a, 0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePoint {
    pub epsilon: f64,
    pub a: f64,
    pub delta: f64,
    pub lambda: f64,
}

impl ThreePoint {
    pub fn new(epsilon: f64, a: f64) -> Result<Self> {
        let DeltaSolution { lambda, delta } = solve_delta(epsilon, a)?;
        Ok(Self {
            epsilon,
            a,
            delta,
            lambda,
        })
    }

    /// Perturbed roots `-a + delta, -delta - eps, 1 + eps`.
    pub fn moved_roots(&self) -> [f64; 3] {
        [
            -self.a + self.delta,
            -self.delta - self.epsilon,
            1.0 + self.epsilon,
        ]
    }

    /// Constant term difference `C` of the perturbed cubic, in full (not asymptotic) form.
    pub fn constant_shift(&self) -> f64 {
        cubic_constant(self.epsilon, self.a, self.delta)
    }

    /// Linear coefficient `b` of `P - Q`, zero up to rounding once `delta` is solved.
    pub fn linear_residual(&self) -> f64 {
        let (a, d, e) = (self.a, self.delta, self.epsilon);
        a * d - e - d * e - d * d - e * e
    }

    /// `R(x) = 1 + C / ((x + a) x (x - 1))`.
    pub fn distortion(&self, x: f64) -> Result<f64> {
        let q = (x + self.a) * x * (x - 1.0);
        if q == 0.0 || !x.is_finite() {
            return Err(invalid(format!("x = {x} is a pole of the 3-point distortion")));
        }
        Ok(1.0 + self.constant_shift() / q)
    }

    /// Ratio of the perturbed to the unperturbed cubic, factor by factor.
    pub fn product_ratio(&self, x: f64) -> f64 {
        let [l, c, r] = self.moved_roots();
        (x - l) / (x + self.a) * ((x - c) / x) * ((x - r) / (x - 1.0))
    }

    /// The perturbed cubic `(x + a - delta)(x + delta + eps)(x - 1 - eps)`.
    pub fn perturbed_cubic(&self, x: f64) -> f64 {
        let [l, c, r] = self.moved_roots();
        (x - l) * (x - c) * (x - r)
    }
}

/// `C = -a d - a e + d^2 + (1 - a) d e - a e^2 + d^2 e + d e^2`.
pub fn cubic_constant(epsilon: f64, a: f64, delta: f64) -> f64 {
    let (d, e) = (delta, epsilon);
    -a * d - a * e + d * d + (1.0 - a) * d * e - a * e * e + d * d * e + d * e * e
}

/// The 3-point distortion `R(x)` at rescaled position `x`.
pub fn distortion_3pt(epsilon: f64, a: f64, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(invalid("distortion_3pt needs finite x"));
    }
    ThreePoint::new(epsilon, a)?.distortion(x)
}

/// Perturbation factors `y_k`, one per group, with `|y_k| <= t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationVector {
    y: Vec<f64>,
    cap: f64,
}

impl PerturbationVector {
    pub fn new(y: Vec<f64>, cap: f64) -> Result<Self> {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(invalid(format!("perturbation cap must be positive, got {cap}")));
        }
        for (i, v) in y.iter().enumerate() {
            if !v.is_finite() || v.abs() > cap {
                return Err(Error::InvalidPerturbation(format!(
                    "y_{} = {v} outside [-{cap}, {cap}]",
                    i + 1
                )));
            }
        }
        Ok(Self { y, cap })
    }

    pub fn zeros(len: usize, cap: f64) -> Result<Self> {
        Self::new(vec![0.0; len], cap)
    }

    /// The vector equal to `y_m` in coordinate `m` (1-based) and zero elsewhere.
    pub fn single(len: usize, m: usize, value: f64, cap: f64) -> Result<Self> {
        if m == 0 || m > len {
            return Err(invalid(format!("group index {m} outside 1..={len}")));
        }
        let mut y = vec![0.0; len];
        y[m - 1] = value;
        Self::new(y, cap)
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.y.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Affine map of group `k` sending the center root to `0` and the right root to `1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RescaleMap {
    pub group: usize,
    /// Center interior root `r_{4k-1}`.
    pub origin: f64,
    /// `|I_{4k-1}|`.
    pub unit: f64,
    /// Image of the left group endpoint, near `-2`.
    pub left_end: f64,
    /// `a` with the left interior root mapped to `-a`.
    pub a: f64,
    /// Image of the right group endpoint, near `2`.
    pub right_end: f64,
}

impl RescaleMap {
    pub fn new(grid: &NodalGrid, k: usize) -> Result<Self> {
        let count = grid.require_groups()?;
        if k == 0 || k > count {
            return Err(invalid(format!("group index {k} outside 1..={count}")));
        }
        let unit = grid.interval_length(4 * k - 1);
        let a = grid.interval_length(4 * k - 2) / unit;
        let left_end = -(grid.interval_length(4 * k - 3) + grid.interval_length(4 * k - 2)) / unit;
        let right_end = 1.0 + grid.interval_length(4 * k) / unit;
        Ok(Self {
            group: k,
            origin: grid.root(4 * k - 1),
            unit,
            left_end,
            a,
            right_end,
        })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.origin) / self.unit
    }

    pub fn invert(&self, u: f64) -> f64 {
        self.origin + u * self.unit
    }
}

/// Roots `z_1 < ... < z_n` of `T_n(x, y) = 2^{n-1} prod (x - z_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedRoots {
    n: usize,
    z: Vec<f64>,
}

impl PerturbedRoots {
    /// Wraps an explicit root list; leading coefficient is `2^{n-1}`.
    pub fn from_roots(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(invalid("need at least one root"));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(invalid("root is not finite"));
        }
        if z.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPerturbation("roots are not strictly increasing".into()));
        }
        Ok(Self { n: z.len(), z })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn roots(&self) -> &[f64] {
        &self.z
    }

    /// Exponent of the leading coefficient `2^{n-1}`.
    pub fn leading_exponent(&self) -> i32 {
        self.n as i32 - 1
    }

    /// `T_n(x, y)`.
    pub fn eval(&self, x: f64) -> f64 {
        eval_perturbed(self, x)
    }

    /// `T_n(x, y) = mantissa * 2^exponent`, safe far outside `[-1, 1]`.
    pub fn eval_split(&self, x: f64) -> (f64, i64) {
        product_split(&self.z, x)
    }

    pub fn to_series(&self) -> Result<ChebSeries> {
        to_series(self)
    }
}

fn group_roots(grid: &NodalGrid, k: usize, y: f64) -> Result<[f64; 3]> {
    let map = RescaleMap::new(grid, k)?;
    let three = ThreePoint::new(y, map.a).map_err(|e| match e {
        Error::SolverFailure(msg) => Error::InvalidPerturbation(format!("group {k}: {msg}")),
        other => other,
    })?;
    let moved = three.moved_roots();
    // Must stay ordered and strictly inside the group.
    let inside = map.left_end < moved[0] && moved[0] < moved[1] && moved[1] < moved[2] && moved[2] < map.right_end;
    if !inside {
        return Err(Error::InvalidPerturbation(format!(
            "group {k}: factor {y} pushes interior roots out of order"
        )));
    }
    let h = map.unit;
    Ok([
        grid.root(4 * k - 2) + three.delta * h,
        grid.root(4 * k - 1) - (y + three.delta) * h,
        grid.root(4 * k) + y * h,
    ])
}

/// Whether factor `y` is realizable in group `k` (solvable `delta`, ordered roots).
pub fn admissible(grid: &NodalGrid, k: usize, y: f64) -> bool {
    group_roots(grid, k, y).is_ok()
}

/// Applies `y` to the interior roots of every group.
pub fn perturbed_roots(grid: &NodalGrid, y: &PerturbationVector) -> Result<PerturbedRoots> {
    let count = grid.require_groups()?;
    if y.len() != count {
        return Err(invalid(format!("expected {count} factors, got {}", y.len())));
    }
    let mut z = grid.roots().to_vec();
    for (i, &yk) in y.values().iter().enumerate() {
        if yk == 0.0 {
            continue;
        }
        let k = i + 1;
        let [l, c, r] = group_roots(grid, k, yk)?;
        z[4 * k - 3] = l;
        z[4 * k - 2] = c;
        z[4 * k - 1] = r;
    }
    PerturbedRoots::from_roots(z)
}

fn split_exponent(v: f64) -> (f64, i64) {
    if v == 0.0 || !v.is_finite() {
        return (v, 0);
    }
    let bits = v.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal: lift into the normal range first
        let (m, e) = split_exponent(v * 2f64.powi(64));
        return (m, e - 64);
    }
    let e = raw - 1023;
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1023 << 52));
    (m, e)
}

fn product_split(z: &[f64], x: f64) -> (f64, i64) {
    let mut m = 0.5;
    let mut e = 0i64;
    for chunk in z.chunks(RENORM_STRIDE) {
        for &zk in chunk {
            m *= 2.0 * (x - zk);
        }
        if m == 0.0 {
            return (0.0, 0);
        }
        let (mm, ee) = split_exponent(m);
        m = mm;
        e += ee;
    }
    (m, e)
}

fn ldexp(m: f64, e: i64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let mut v = m;
    let mut e = e;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
        if v.is_infinite() {
            return v;
        }
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
        if v == 0.0 {
            return v;
        }
    }
    v * 2f64.powi(e as i32)
}

/// `T_n(x, y) = 1/2 prod 2 (x - z_k)`.
///
/// Short products run unnormalized; longer ones, or any short product that
/// over- or underflows, go through binary-exponent renormalization.
pub fn eval_perturbed(roots: &PerturbedRoots, x: f64) -> f64 {
    let z = &roots.z;
    if z.len() <= 64 {
        let mut v = 0.5;
        let mut hit_root = false;
        for &zk in z {
            let f = 2.0 * (x - zk);
            hit_root |= f == 0.0;
            v *= f;
        }
        if hit_root || (v.is_finite() && v.is_normal()) {
            return v;
        }
    }
    let (m, e) = product_split(z, x);
    ldexp(m, e)
}

/// The degree-`n` Chebyshev series of `T_n(x, y)`.
pub fn to_series(roots: &PerturbedRoots) -> Result<ChebSeries> {
    let pts = extreme_points(roots.n);
    let values: Vec<f64> = pts.iter().map(|&x| eval_perturbed(roots, x)).collect();
    cheb_interpolate(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::build_grid;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent bisection on `r_a(lambda) - eps` over `[0.5, 2]`.
    fn bisect_lambda(eps: f64, a: f64) -> f64 {
        let (mut lo, mut hi) = (0.5, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (a * mid - 1.0) / (mid * mid + mid + 1.0) < eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Smaller root of `eps l^2 - (a - eps) l + (1 + eps) = 0`.
    fn quadratic_lambda(eps: f64, a: f64) -> f64 {
        let b = a - eps;
        let disc = b * b - 4.0 * eps * (1.0 + eps);
        2.0 * (1.0 + eps) / (b + disc.sqrt())
    }

    #[test]
    fn delta_at_zero_eps() {
        for a in [0.8, 1.0, 1.17] {
            let s = solve_delta(0.0, a).unwrap();
            assert_eq!(s.delta, 0.0);
            assert_abs_diff_eq!(s.lambda, 1.0 / a, epsilon = 1e-15);
        }
    }

    #[test]
    fn delta_matches_bisection_oracle() {
        let s = solve_delta(0.05, 1.0).unwrap();
        let oracle = bisect_lambda(0.05, 1.0);
        assert_abs_diff_eq!(s.lambda, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(s.lambda, quadratic_lambda(0.05, 1.0), epsilon = 1e-12);
        // lambda ~ 1/a + 3 eps / a to first order
        assert!((s.lambda - 1.15).abs() < 0.05, "lambda={}", s.lambda);
        assert_abs_diff_eq!(s.delta, s.lambda * 0.05, epsilon = 1e-16);
        assert!(r_a(1.0, s.lambda) - 0.05 < DELTA_RESIDUAL_TOL);
    }

    #[test]
    fn delta_fig_parameters() {
        let s = solve_delta(0.09, 1.1).unwrap();
        // delta = eps / a + O(eps^2): comparable to eps at these values
        assert!((s.delta - 0.09).abs() < 0.03, "delta={}", s.delta);
        assert!(s.delta > 0.09 / 1.1);
        assert_abs_diff_eq!(s.lambda, quadratic_lambda(0.09, 1.1), epsilon = 1e-12);
    }

    #[test]
    fn delta_sign_and_first_order() {
        for &a in &[0.85, 1.0, 1.15] {
            for &eps in &[-0.1, -0.03, -0.001, 0.001, 0.03, 0.1] {
                let s = solve_delta(eps, a).unwrap();
                assert_eq!(s.delta.signum(), eps.signum());
                let l = s.lambda;
                assert_abs_diff_eq!(s.delta - eps / a, eps * eps * (l * l + l + 1.0) / a, epsilon = 1e-14);
                assert_abs_diff_eq!(s.lambda, quadratic_lambda(eps, a), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn delta_outside_regime_fails() {
        assert!(matches!(solve_delta(0.3, 1.0), Err(Error::SolverFailure(_))));
        assert!(matches!(solve_delta(0.1, 0.6), Err(Error::SolverFailure(_))));
        assert!(solve_delta(0.01, -1.0).is_err());
    }

    #[test]
    fn two_point_examples() {
        for x in [-3.0, 0.0, 0.5, 7.0] {
            assert_eq!(distortion_2pt(0.0, x).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(distortion_2pt(0.1, 0.0).unwrap(), 1.21, epsilon = 1e-15);
        let v = distortion_2pt(0.1, 3.0).unwrap();
        assert_abs_diff_eq!(v, 0.973_75, epsilon = 1e-15);
        assert_abs_diff_eq!(v, (3.0 - 1.1) * (3.0 + 1.1) / 8.0, epsilon = 1e-15);
        assert!(distortion_2pt(0.1, 1.0).is_err());
        assert!(distortion_2pt(0.1, -1.0).is_err());
    }

    #[test]
    fn two_point_bounds() {
        let eps = 0.07;
        for i in 1..100 {
            let x = -1.0 + 2.0 * i as f64 / 100.0;
            assert!(distortion_2pt(eps, x).unwrap() >= 1.0 + 2.0 * eps + eps * eps - 1e-15);
        }
        for x in [1.08, 1.5, -2.0, 40.0] {
            let v = distortion_2pt(eps, x).unwrap();
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn three_point_examples() {
        for x in [-3.0, -0.5, 0.5, 4.0] {
            assert_eq!(distortion_3pt(0.0, 1.0, x).unwrap(), 1.0);
        }
        let tp = ThreePoint::new(0.05, 1.0).unwrap();
        let rational = 1.0 + tp.constant_shift() / (6.0 * 5.0 * 4.0);
        assert_abs_diff_eq!(distortion_3pt(0.05, 1.0, 5.0).unwrap(), rational, epsilon = 1e-15);
        assert_abs_diff_eq!(tp.product_ratio(5.0), rational, epsilon = 1e-13);
        assert!(tp.linear_residual().abs() < 1e-14);
        assert!(distortion_3pt(0.05, 1.0, 0.0).is_err());
        assert!(distortion_3pt(0.05, 1.0, 1.0).is_err());
        assert!(distortion_3pt(0.05, 1.0, -1.0).is_err());
    }

    #[test]
    fn three_point_center_interval_lower_bound() {
        for &eps in &[0.005, 0.01, 0.02] {
            let tp = ThreePoint::new(eps, 1.02).unwrap();
            for i in 1..200 {
                let x = i as f64 / 200.0;
                assert!((tp.distortion(x).unwrap() - 1.0) / eps >= 2.5);
            }
        }
    }

    #[test]
    fn rescale_map_images() {
        let g = build_grid(105).unwrap();
        let m = RescaleMap::new(&g, 13).unwrap();
        assert_abs_diff_eq!(m.apply(g.root(4 * 13 - 1)), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.apply(g.root(4 * 13)), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.apply(g.root(4 * 13 - 2)), -m.a, epsilon = 1e-12);
        assert_abs_diff_eq!(m.apply(g.root(4 * 13 - 3)), m.left_end, epsilon = 1e-12);
        assert_abs_diff_eq!(m.apply(g.root(4 * 13 + 1)), m.right_end, epsilon = 1e-12);
        assert!((m.a - 1.0).abs() < 0.05);
        assert!((m.left_end + 2.0).abs() < 0.1 && (m.right_end - 2.0).abs() < 0.1);
        assert_abs_diff_eq!(m.invert(m.apply(0.123)), 0.123, epsilon = 1e-15);
        assert!(RescaleMap::new(&g, 0).is_err());
        assert!(RescaleMap::new(&g, 27).is_err());
        assert!(RescaleMap::new(&build_grid(100).unwrap(), 1).is_err());
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let g = build_grid(33).unwrap();
        let y = PerturbationVector::zeros(8, 0.1).unwrap();
        let z = perturbed_roots(&g, &y).unwrap();
        assert_eq!(z.roots(), g.roots());
    }

    #[test]
    fn single_group_perturbation_is_local() {
        let g = build_grid(33).unwrap();
        let y = PerturbationVector::single(8, 3, 0.09, 0.1).unwrap();
        let z = perturbed_roots(&g, &y).unwrap();
        let changed: Vec<usize> = (1..=33).filter(|&k| z.roots()[k - 1] != g.root(k)).collect();
        assert_eq!(changed, vec![10, 11, 12]);
        let h = g.interval_length(11);
        assert_abs_diff_eq!(z.roots()[11], g.root(12) + 0.09 * h, epsilon = 1e-15);
    }

    #[test]
    fn center_of_mass_preserved() {
        let g = build_grid(105).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..16 {
            let y: Vec<f64> = (0..26).map(|_| rng.gen_range(-0.05..=0.05)).collect();
            let z = perturbed_roots(&g, &PerturbationVector::new(y, 0.1).unwrap()).unwrap();
            for k in 1..=26 {
                let before: f64 = (4 * k - 2..=4 * k).map(|i| g.root(i)).sum();
                let after: f64 = (4 * k - 3..4 * k).map(|i| z.roots()[i]).sum();
                assert!((before - after).abs() <= 1e-12 * g.group_length(k));
                assert_eq!(z.roots()[4 * k - 4], g.root(4 * k - 3));
            }
        }
    }

    #[test]
    fn perturbation_vector_validation() {
        assert!(PerturbationVector::new(vec![0.2], 0.1).is_err());
        assert!(PerturbationVector::new(vec![0.05], 0.0).is_err());
        assert!(PerturbationVector::new(vec![f64::NAN], 0.1).is_err());
        let g = build_grid(33).unwrap();
        let wrong_len = PerturbationVector::zeros(7, 0.1).unwrap();
        assert!(perturbed_roots(&g, &wrong_len).is_err());
        assert!(perturbed_roots(&build_grid(32).unwrap(), &wrong_len).is_err());
    }

    #[test]
    fn oversized_factor_is_rejected() {
        let g = build_grid(105).unwrap();
        let y = PerturbationVector::single(26, 13, 0.6, 1.0).unwrap();
        assert!(matches!(perturbed_roots(&g, &y), Err(Error::InvalidPerturbation(_))));
        assert!(!admissible(&g, 1, 0.1));
        assert!(admissible(&g, 1, 0.02));
    }

    #[test]
    fn product_form_matches_clenshaw() {
        for n in [9usize, 65, 105, 401, 1001] {
            let g = build_grid(n).unwrap();
            let z = PerturbedRoots::from_roots(g.roots().to_vec()).unwrap();
            let tn = ChebSeries::basis(n);
            for i in 0..=200 {
                let x = -1.0 + 2.0 * i as f64 / 200.0;
                assert_abs_diff_eq!(eval_perturbed(&z, x), tn.eval(x), epsilon = 1e-13 * n as f64);
            }
            for k in [1, n / 2, n] {
                assert_eq!(eval_perturbed(&z, z.roots()[k - 1]), 0.0);
            }
        }
    }

    #[test]
    fn split_evaluation_outside_interval() {
        let g = build_grid(1001).unwrap();
        let z = PerturbedRoots::from_roots(g.roots().to_vec()).unwrap();
        // T_n(x) ~ (2x)^n / 2 for large x; log2 T_1001(3) = 1000 + 1001 log2(3) - 1 - ... roughly
        let (m, e) = z.eval_split(3.0);
        let log2 = m.abs().log2() + e as f64;
        let expect = (3.0f64 + 8.0f64.sqrt()).log2() * 1001.0 - 1.0;
        assert!((log2 - expect).abs() < 1e-9, "{log2} vs {expect}");
        assert!(eval_perturbed(&z, 3.0).is_infinite());
    }

    #[test]
    fn series_of_unperturbed_is_basis() {
        let g = build_grid(33).unwrap();
        let z = PerturbedRoots::from_roots(g.roots().to_vec()).unwrap();
        let s = to_series(&z).unwrap();
        for (k, c) in s.coeffs().iter().enumerate() {
            let expect = if k == 33 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(*c, expect, epsilon = 1e-11);
        }
    }
}
