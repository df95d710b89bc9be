//! Group averages of `T_n(x, y)` and the fixed-point solve `g(y) = a`.
//!
//! `g_k(y)` is the per-length integral of `T_n(., y)` over `G_k` with every
//! group perturbed; `f_k(y_k)` is the same average when only group `k` moves.
//! Because a single-group move multiplies `T_n` by `R(u) = 1 + C / Q(u)` with
//! `Q(u) = (u + a) u (u - 1)`, each `f_k` is an explicit function of `y_k`:
//! `f_k(y) = A_k(0) + C(y, a_k) m_k`, with `m_k` the group average of `T_n / Q`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cheb::{cheb_interpolate, ChebSeries, NodalGrid};
use crate::error::{invalid, Error, Result};
use crate::perturb::{admissible, perturbed_roots, to_series, PerturbationVector, RescaleMap, ThreePoint};

/// Groups whose rescaled left-root position `a` lies in this band count as interior.
pub const INTERIOR_A_RANGE: (f64, f64) = (0.8, 1.2);

/// Residual growth streak after which damping is halved.
const GROWTH_STREAK: usize = 2;

pub fn is_interior(a: f64) -> bool {
    (INTERIOR_A_RANGE.0..=INTERIOR_A_RANGE.1).contains(&a)
}

/// Per-length averages of `series` over every group interval.
pub fn averages_of_series(grid: &NodalGrid, series: &ChebSeries) -> Result<Vec<f64>> {
    let count = grid.require_groups()?;
    let q = series.antiderivative(0.0, 0.0);
    let ends: Vec<f64> = grid.group_endpoints().iter().map(|&x| q.eval(x)).collect();
    Ok((1..=count)
        .map(|k| (ends[k] - ends[k - 1]) / grid.group_length(k))
        .collect())
}

/// `A_k(y)`: the average of `T_n(., y)` over each `G_k`.
pub fn group_averages(grid: &NodalGrid, y: &PerturbationVector) -> Result<Vec<f64>> {
    let z = perturbed_roots(grid, y)?;
    averages_of_series(grid, &to_series(&z)?)
}

/// The single-group response `f_k` together with its admissible domain and range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupResponse {
    pub group: usize,
    pub a: f64,
    /// `A_k(0)`.
    pub base: f64,
    /// Group average of `T_n / Q(u)`.
    pub moment: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

fn largest_admissible(grid: &NodalGrid, k: usize, cap: f64, sign: f64) -> f64 {
    if admissible(grid, k, sign * cap) {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if admissible(grid, k, sign * mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `x_j - r_i` for extreme point `x_j = cos(pi j / n)` and root `r_i`, via the sine difference formula.
fn extreme_minus_root(n: usize, j: usize, i: usize) -> f64 {
    let (n, j, i) = (n as f64, j as f64, i as f64);
    2.0 * (PI * (2.0 * i - 1.0 - 2.0 * j) / (4.0 * n)).cos() * (PI * (2.0 * n - 2.0 * j - 2.0 * i + 1.0) / (4.0 * n)).sin()
}

fn group_moment(grid: &NodalGrid, k: usize, unit: f64) -> Result<f64> {
    let n = grid.n();
    let interior = [4 * k - 2, 4 * k - 1, 4 * k];
    // T_n = (-1)^j at the extreme points, never a root, so the quotient is sampled exactly.
    let values: Vec<f64> = (0..=n)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let denom: f64 = interior.iter().map(|&i| extreme_minus_root(n, j, i)).product();
            sign / denom
        })
        .collect();
    let quotient = cheb_interpolate(&values)?;
    let (lo, hi) = grid.group(k);
    let q = quotient.antiderivative(lo, 0.0);
    Ok(unit.powi(3) * q.eval(hi) / grid.group_length(k))
}

impl GroupResponse {
    pub fn new(grid: &NodalGrid, k: usize, cap: f64) -> Result<Self> {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(invalid(format!("perturbation cap must be positive, got {cap}")));
        }
        let map = RescaleMap::new(grid, k)?;
        let tn = ChebSeries::basis(grid.n()).antiderivative(0.0, 0.0);
        let (lo, hi) = grid.group(k);
        let base = (tn.eval(hi) - tn.eval(lo)) / grid.group_length(k);
        let moment = group_moment(grid, k, map.unit)?;
        let y_lo = -largest_admissible(grid, k, cap, -1.0);
        let y_hi = largest_admissible(grid, k, cap, 1.0);
        let mut out = Self {
            group: k,
            a: map.a,
            base,
            moment,
            y_lo,
            y_hi,
            f_lo: 0.0,
            f_hi: 0.0,
        };
        out.f_lo = out.eval(y_lo)?;
        out.f_hi = out.eval(y_hi)?;
        Ok(out)
    }

    /// `f_k(y)`.
    pub fn eval(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(self.base);
        }
        let three = ThreePoint::new(y, self.a)?;
        Ok(self.base + three.constant_shift() * self.moment)
    }

    pub fn is_interior(&self) -> bool {
        is_interior(self.a)
    }

    pub fn contains(&self, target: f64) -> bool {
        let (lo, hi) = (self.f_lo.min(self.f_hi), self.f_lo.max(self.f_hi));
        (lo..=hi).contains(&target)
    }

    /// Clamps `target` into the attainable range.
    pub fn clamp(&self, target: f64) -> f64 {
        target.clamp(self.f_lo.min(self.f_hi), self.f_lo.max(self.f_hi))
    }

    /// `y` with `f_k(y) = target`, by monotone bisection and secant polish.
    pub fn inverse(&self, target: f64) -> Result<f64> {
        if !target.is_finite() {
            return Err(invalid("inverse target is not finite"));
        }
        if !self.contains(target) {
            return Err(Error::Range {
                target,
                lo: self.f_lo.min(self.f_hi),
                hi: self.f_lo.max(self.f_hi),
            });
        }
        let rising = self.f_hi >= self.f_lo;
        let h = |y: f64| self.eval(y).map(|v| v - target);
        let (mut lo, mut hi) = (self.y_lo, self.y_hi);
        let (mut h_lo, mut h_hi) = (self.f_lo - target, self.f_hi - target);
        if h_lo == 0.0 {
            return Ok(lo);
        }
        if h_hi == 0.0 {
            return Ok(hi);
        }
        for _ in 0..200 {
            // secant step, falling back to bisection when it leaves the bracket
            let mut mid = lo - h_lo * (hi - lo) / (h_hi - h_lo);
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let hm = h(mid)?;
            if hm == 0.0 {
                return Ok(mid);
            }
            if (hm > 0.0) == rising {
                hi = mid;
                h_hi = hm;
            } else {
                lo = mid;
                h_lo = hm;
            }
            if hm.abs() <= 1e-14 || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
                return Ok(mid);
            }
            // keep the bracket shrinking geometrically
            let m = 0.5 * (lo + hi);
            let hm2 = h(m)?;
            if hm2 == 0.0 {
                return Ok(m);
            }
            if (hm2 > 0.0) == rising {
                hi = m;
                h_hi = hm2;
            } else {
                lo = m;
                h_lo = hm2;
            }
        }
        Ok(if h_lo.abs() < h_hi.abs() { lo } else { hi })
    }
}

/// The decoupled map `f` for a whole grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FMap {
    cap: f64,
    responses: Vec<GroupResponse>,
}

impl FMap {
    pub fn new(grid: &NodalGrid, cap: f64) -> Result<Self> {
        let count = grid.require_groups()?;
        let responses = (1..=count)
            .into_par_iter()
            .map(|k| GroupResponse::new(grid, k, cap))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cap, responses })
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// Response of group `k` (1-based).
    pub fn group(&self, k: usize) -> &GroupResponse {
        &self.responses[k - 1]
    }

    pub fn responses(&self) -> &[GroupResponse] {
        &self.responses
    }

    pub fn eval(&self, y: &PerturbationVector) -> Result<Vec<f64>> {
        if y.len() != self.len() {
            return Err(invalid(format!("expected {} factors, got {}", self.len(), y.len())));
        }
        self.responses.iter().zip(y.values()).map(|(r, &v)| r.eval(v)).collect()
    }

    pub fn base_averages(&self) -> Vec<f64> {
        self.responses.iter().map(|r| r.base).collect()
    }

    pub fn interior_groups(&self) -> Vec<usize> {
        self.responses.iter().filter(|r| r.is_interior()).map(|r| r.group).collect()
    }
}

/// `f(y)`: coordinate `k` is the group-`k` average with only `y_k` applied.
pub fn f_map(grid: &NodalGrid, y: &PerturbationVector) -> Result<Vec<f64>> {
    FMap::new(grid, y.cap())?.eval(y)
}

/// Inverts `f_k` on `[-cap, cap]`.
pub fn f_inverse_1d(grid: &NodalGrid, k: usize, target: f64, cap: f64) -> Result<f64> {
    GroupResponse::new(grid, k, cap)?.inverse(target)
}

/// Target per-length averages `a_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetAverages {
    a: Vec<f64>,
    cap: f64,
}

impl TargetAverages {
    pub fn new(a: Vec<f64>, cap: f64) -> Result<Self> {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(invalid(format!("target cap must be positive, got {cap}")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(invalid("target average is not finite"));
        }
        Ok(Self { a, cap })
    }

    pub fn values(&self) -> &[f64] {
        &self.a
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Whether every target lies in the guaranteed covering cube `[-t/2, t/2]^N`.
    pub fn within_covering(&self) -> bool {
        self.a.iter().all(|v| v.abs() <= 0.5 * self.cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub t_cap: f64,
    pub tol: f64,
    pub damping: f64,
    pub max_iter: usize,
    /// Groups `k <= K` and `k > N - K` are left unperturbed.
    pub edge_groups: usize,
    /// Retry once with halved damping when the first pass does not converge.
    pub restart: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            t_cap: crate::perturb::DEFAULT_T_CAP,
            tol: 1e-9,
            damping: 0.7,
            max_iter: 200,
            edge_groups: 0,
            restart: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_cap > 0.0 && self.t_cap <= 0.1) {
            return Err(invalid(format!("t_cap must lie in (0, 0.1], got {}", self.t_cap)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub y: PerturbationVector,
    /// `max_k |g_k(y) - a_k|` over non-frozen groups.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// 1-based groups held at `y_k = 0`.
    pub frozen_edge_groups: Vec<usize>,
    pub final_damping: f64,
    pub restarts: usize,
    /// `g(y)` at the returned `y`.
    pub averages: Vec<f64>,
}

/// Solves `g(y) = a` with the damped iteration `y <- f^{-1}(a + f(y) - g(y))`.
pub fn solve_targets(grid: &NodalGrid, targets: &TargetAverages, config: &SolveConfig) -> Result<SolveReport> {
    config.validate()?;
    let model = FMap::new(grid, config.t_cap)?;
    solve_with_model(grid, &model, targets, config)
}

/// [`solve_targets`] with a precomputed `f`.
pub fn solve_with_model(
    grid: &NodalGrid,
    model: &FMap,
    targets: &TargetAverages,
    config: &SolveConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let count = model.len();
    if targets.len() != count {
        return Err(invalid(format!("expected {count} targets, got {}", targets.len())));
    }
    if model.cap() != config.t_cap {
        return Err(invalid("model cap differs from solver t_cap"));
    }
    let a = targets.values();
    let k_edge = config.edge_groups;
    let frozen: Vec<bool> = (1..=count)
        .map(|k| k <= k_edge || k + k_edge > count || !model.group(k).contains(a[k - 1]))
        .collect();
    let frozen_list: Vec<usize> = (1..=count).filter(|&k| frozen[k - 1]).collect();

    let mut report = iterate(grid, model, a, &frozen, config, config.damping)?;
    if !report.converged && config.restart {
        let retry = iterate(grid, model, a, &frozen, config, 0.5 * config.damping)?;
        let iterations = report.iterations + retry.iterations;
        if retry.residual < report.residual {
            report = retry;
        }
        report.iterations = iterations;
        report.restarts = 1;
    }
    report.frozen_edge_groups = frozen_list;
    Ok(report)
}

fn iterate(
    grid: &NodalGrid,
    model: &FMap,
    a: &[f64],
    frozen: &[bool],
    config: &SolveConfig,
    damping: f64,
) -> Result<SolveReport> {
    let count = model.len();
    let cap = config.t_cap;
    let mut y = vec![0.0; count];
    let mut theta = damping;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut previous = f64::INFINITY;
    let mut streak = 0;
    let mut iterations = 0;
    loop {
        let yv = PerturbationVector::new(y.clone(), cap)?;
        let g = group_averages(grid, &yv)?;
        let residual = (0..count)
            .filter(|&i| !frozen[i])
            .map(|i| (g[i] - a[i]).abs())
            .fold(0.0, f64::max);
        if best.as_ref().map_or(true, |b| residual < b.0) {
            best = Some((residual, y.clone(), g.clone()));
        }
        if residual <= config.tol || iterations >= config.max_iter {
            break;
        }
        if residual > previous {
            streak += 1;
            if streak >= GROWTH_STREAK {
                theta *= 0.5;
                streak = 0;
            }
        } else {
            streak = 0;
        }
        previous = residual;
        let updates = (0..count)
            .into_par_iter()
            .map(|i| {
                if frozen[i] {
                    return Ok(0.0);
                }
                let r = model.group(i + 1);
                let want = r.clamp(a[i] + r.eval(y[i])? - g[i]);
                r.inverse(want)
            })
            .collect::<Result<Vec<f64>>>()?;
        for (i, (yi, ui)) in y.iter_mut().zip(updates).enumerate() {
            let r = model.group(i + 1);
            // the convex combination can round just past the admissible range
            *yi = ((1.0 - theta) * *yi + theta * ui).clamp(r.y_lo, r.y_hi);
        }
        iterations += 1;
    }
    let (residual, y, averages) = best.expect("at least one evaluation");
    Ok(SolveReport {
        y: PerturbationVector::new(y, cap)?,
        residual,
        iterations,
        converged: residual <= config.tol,
        frozen_edge_groups: Vec::new(),
        final_damping: theta,
        restarts: 0,
        averages,
    })
}
