//! End-to-end drivers: the constrained approximant, rate studies, the weak-*
//! demo and level-set statistics of the perturbed derivative.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cheb::{build_grid, ChebSeries, NodalGrid};
use crate::error::{invalid, Result};
use crate::function::{require_span, FunctionSpec};
use crate::perturb::{eval_perturbed, perturbed_roots, to_series, PerturbedRoots};
use crate::quadrature::{panel_cuts, GaussRule};
use crate::solver::{solve_targets, SolveConfig, SolveReport, TargetAverages};

/// Constant of the best unconstrained error `~ 0.280169 / n` for `|x|`.
pub const ABS_BEST_CONSTANT: f64 = 0.280_169;

/// Default degree schedule for multi-degree studies.
pub const DEFAULT_DEGREES: [usize; 4] = [105, 201, 401, 801];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub solve: SolveConfig,
    /// The derivative is `(A / level) T_n(., y)`, so every target satisfies `|a_k| <= level`.
    pub level: f64,
    pub samples_per_interval: usize,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            solve: SolveConfig::default(),
            level: 0.25,
            samples_per_interval: 32,
        }
    }
}

impl ApproxConfig {
    pub fn validate(&self) -> Result<()> {
        self.solve.validate()?;
        if !(self.level.is_finite() && self.level > 0.0 && self.level <= 1.0) {
            return Err(invalid(format!("level must lie in (0, 1], got {}", self.level)));
        }
        if self.samples_per_interval == 0 {
            return Err(invalid("samples_per_interval must be at least 1"));
        }
        Ok(())
    }
}

/// Checks the `n = 8m + 1`, `n >= 9` requirement.
pub fn check_degree(n: usize) -> Result<()> {
    if n < 9 || n % 8 != 1 {
        return Err(invalid(format!("degree must be ≡ 1 (mod 8) and at least 9, got {n}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointResidual {
    pub x: f64,
    pub residual: f64,
    /// Reachable from the anchor at `0` through solved groups only.
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointReport {
    pub count: usize,
    pub all_in_interval: bool,
    pub strictly_increasing: bool,
    /// 1-based indices of roots without a sign change of `p'` across them.
    pub missing_sign_changes: Vec<usize>,
}

impl CriticalPointReport {
    pub fn passed(&self) -> bool {
        self.all_in_interval && self.strictly_increasing && self.missing_sign_changes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxResult {
    pub n: usize,
    pub function: String,
    pub approximant: ChebSeries,
    pub derivative_roots: PerturbedRoots,
    pub sup_error: f64,
    /// `sup |P - f|` over each group interval.
    pub group_errors: Vec<f64>,
    pub max_derivative: f64,
    pub endpoint_residuals: Vec<EndpointResidual>,
    pub solve: SolveReport,
    /// `A / level`.
    pub scale_factor: f64,
    pub lipschitz: f64,
    /// `P(0) = f(0)`.
    pub anchor: f64,
    pub targets: Vec<f64>,
    /// `max |P' - scale T_n(., y)| / scale` over sample points.
    pub derivative_mismatch: f64,
}

impl ApproxResult {
    pub fn converged(&self) -> bool {
        self.solve.converged
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.approximant.eval(x)
    }

    pub fn max_matched_residual(&self) -> f64 {
        self.endpoint_residuals
            .iter()
            .filter(|e| e.matched)
            .map(|e| e.residual)
            .fold(0.0, f64::max)
    }

    /// All derivative roots in `[-1, 1]`, and `P'` changes sign across each.
    pub fn critical_point_check(&self) -> CriticalPointReport {
        critical_point_check(&self.approximant.derivative(), &self.derivative_roots)
    }
}

/// Verifies the critical points of `derivative` given its claimed roots.
pub fn critical_point_check(derivative: &ChebSeries, roots: &PerturbedRoots) -> CriticalPointReport {
    let z = roots.roots();
    let all_in_interval = z.iter().all(|v| (-1.0..=1.0).contains(v));
    let strictly_increasing = z.windows(2).all(|w| w[0] < w[1]);
    let mut probes = Vec::with_capacity(z.len() + 1);
    probes.push(0.5 * (-1.0 + z[0]));
    probes.extend(z.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    probes.push(0.5 * (z[z.len() - 1] + 1.0));
    let values: Vec<f64> = probes.iter().map(|&x| derivative.eval(x)).collect();
    let missing_sign_changes = (0..z.len())
        .filter(|&i| !(values[i] * values[i + 1] < 0.0))
        .map(|i| i + 1)
        .collect();
    CriticalPointReport {
        count: z.len(),
        all_in_interval,
        strictly_increasing,
        missing_sign_changes,
    }
}

/// Which group endpoints are tied to the anchor through solved groups.
fn matched_endpoints(count: usize, frozen: &[usize]) -> Vec<bool> {
    let mid = count / 2;
    let mut matched = vec![false; count + 1];
    matched[mid] = true;
    for j in mid..count {
        matched[j + 1] = matched[j] && !frozen.contains(&(j + 1));
    }
    for j in (0..mid).rev() {
        matched[j] = matched[j + 1] && !frozen.contains(&(j + 1));
    }
    matched
}

/// Sampling pieces `[-1, r_1], I_1, ..., I_{n-1}, [r_n, 1]`.
fn sample_pieces(grid: &NodalGrid) -> Vec<(f64, f64)> {
    let r = grid.roots();
    let mut pieces = Vec::with_capacity(r.len() + 1);
    pieces.push((-1.0, r[0]));
    pieces.extend(r.windows(2).map(|w| (w[0], w[1])));
    pieces.push((r[r.len() - 1], 1.0));
    pieces
}

/// The approximant with derivative `(A / level) T_n(., y)` matching `f` at solved group endpoints.
pub fn approximate(f: &FunctionSpec, n: usize, config: &ApproxConfig) -> Result<ApproxResult> {
    check_degree(n)?;
    config.validate()?;
    require_span(f)?;
    let lipschitz = f
        .lipschitz()
        .ok_or_else(|| invalid(format!("function {f} is not Lipschitz; use the weak-* demo instead")))?;
    let grid = build_grid(n)?;
    let count = grid.require_groups()?;
    let scale = if lipschitz > 0.0 { lipschitz } else { 1.0 } / config.level;
    let ends = grid.group_endpoints();
    let targets: Vec<f64> = (1..=count)
        .map(|k| (f.eval(ends[k]) - f.eval(ends[k - 1])) / grid.group_length(k) / scale)
        .collect();
    let solve = solve_targets(
        &grid,
        &TargetAverages::new(targets.clone(), config.solve.t_cap)?,
        &config.solve,
    )?;
    let roots = perturbed_roots(&grid, &solve.y)?;
    let derivative = to_series(&roots)?.scale(scale);
    let anchor = f.eval(0.0);
    let approximant = derivative.antiderivative(0.0, anchor);

    let m = config.samples_per_interval;
    let pieces = sample_pieces(&grid);
    // piece i (1-based nodal interval i) lies in group (i + 3) / 4
    let piece_stats: Vec<(f64, f64, f64)> = pieces
        .par_iter()
        .map(|&(lo, hi)| {
            let (mut err, mut slope, mut mismatch) = (0.0f64, 0.0f64, 0.0f64);
            for i in 0..=m {
                let x = lo + (hi - lo) * i as f64 / m as f64;
                err = err.max((approximant.eval(x) - f.eval(x)).abs());
                let d = derivative.eval(x);
                slope = slope.max(d.abs());
                mismatch = mismatch.max((d / scale - eval_perturbed(&roots, x)).abs());
            }
            (err, slope, mismatch)
        })
        .collect();
    let sup_error = piece_stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let max_derivative = piece_stats.iter().map(|s| s.1).fold(0.0, f64::max);
    let derivative_mismatch = piece_stats.iter().map(|s| s.2).fold(0.0, f64::max);
    let group_errors = (1..=count)
        .map(|k| (4 * k - 3..=4 * k).map(|i| piece_stats[i].0).fold(0.0, f64::max))
        .collect();

    let matched = matched_endpoints(count, &solve.frozen_edge_groups);
    let endpoint_residuals = ends
        .iter()
        .zip(matched)
        .map(|(&x, matched)| EndpointResidual {
            x,
            residual: (approximant.eval(x) - f.eval(x)).abs(),
            matched,
        })
        .collect();

    Ok(ApproxResult {
        n,
        function: f.name(),
        approximant,
        derivative_roots: roots,
        sup_error,
        group_errors,
        max_derivative,
        endpoint_residuals,
        solve,
        scale_factor: scale,
        lipschitz,
        anchor,
        targets,
        derivative_mismatch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(x, y)` pairs.
pub fn fit_line(points: &[(f64, f64)]) -> Option<LinearFit> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub sup_error: f64,
    pub converged: bool,
    pub critical_points_ok: bool,
    pub max_matched_residual: f64,
    pub log_n: f64,
    pub log_error: f64,
    /// `0.280169 / n`.
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateStudy {
    pub function: String,
    pub rows: Vec<RateRow>,
    pub fit: Option<LinearFit>,
    pub note: Option<String>,
}

/// Errors below this are treated as exact and not fitted.
const FIT_FLOOR: f64 = 1e-8;

pub fn rate_study(f: &FunctionSpec, degrees: &[usize], config: &ApproxConfig) -> Result<RateStudy> {
    if degrees.is_empty() {
        return Err(invalid("degree list is empty"));
    }
    for &n in degrees {
        check_degree(n)?;
    }
    let results: Vec<ApproxResult> = degrees
        .par_iter()
        .map(|&n| approximate(f, n, config))
        .collect::<Result<_>>()?;
    let rows: Vec<RateRow> = results
        .iter()
        .map(|r| RateRow {
            n: r.n,
            sup_error: r.sup_error,
            converged: r.converged(),
            critical_points_ok: r.critical_point_check().passed(),
            max_matched_residual: r.max_matched_residual(),
            log_n: (r.n as f64).ln(),
            log_error: r.sup_error.ln(),
            reference: ABS_BEST_CONSTANT / r.n as f64,
        })
        .collect();
    let usable: Vec<(f64, f64)> = rows.iter().filter(|r| r.converged).map(|r| (r.log_n, r.log_error)).collect();
    let mut notes = Vec::new();
    let skipped: Vec<String> = rows.iter().filter(|r| !r.converged).map(|r| r.n.to_string()).collect();
    if !skipped.is_empty() {
        notes.push(format!("non-converged degrees excluded from fit: {}", skipped.join(",")));
    }
    let fit = if rows.iter().filter(|r| r.converged).all(|r| r.sup_error <= FIT_FLOOR) {
        notes.push("all errors at the solver tolerance floor; fit skipped".into());
        None
    } else {
        let fit = fit_line(&usable);
        if fit.is_none() {
            notes.push("fewer than two converged degrees; fit skipped".into());
        }
        fit
    };
    Ok(RateStudy {
        function: f.name(),
        rows,
        fit,
        note: (!notes.is_empty()).then(|| notes.join("; ")),
    })
}

/// `p_n = scale T_n(., y)` whose group integrals match those of `f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakApproximant {
    pub n: usize,
    pub series: ChebSeries,
    pub roots: PerturbedRoots,
    pub scale: f64,
    pub solve: SolveReport,
}

pub fn weak_approximant(f: &FunctionSpec, n: usize, config: &ApproxConfig) -> Result<WeakApproximant> {
    check_degree(n)?;
    config.validate()?;
    require_span(f)?;
    let grid = build_grid(n)?;
    let count = grid.require_groups()?;
    let norm = f.sup_norm();
    let scale = if norm > 0.0 { norm } else { 1.0 } / config.level;
    let targets: Vec<f64> = (1..=count)
        .map(|k| {
            let (lo, hi) = grid.group(k);
            f.integral(lo, hi) / grid.group_length(k) / scale
        })
        .collect();
    let solve = solve_targets(&grid, &TargetAverages::new(targets, config.solve.t_cap)?, &config.solve)?;
    let roots = perturbed_roots(&grid, &solve.y)?;
    let series = to_series(&roots)?.scale(scale);
    Ok(WeakApproximant {
        n,
        series,
        roots,
        scale,
        solve,
    })
}

const PAIRING_NODES: usize = 10;
const EXACT_PANELS: usize = 256;

/// `int_{-1}^{1} p g`: exact through the series product when `g` is a polynomial.
pub fn pairing(p: &WeakApproximant, g: &FunctionSpec) -> Result<f64> {
    if let Some(mono) = g.as_polynomial() {
        return p.series.mul(&ChebSeries::from_monomial(&mono)?).integrate(-1.0, 1.0);
    }
    let mut cuts = vec![-1.0];
    cuts.extend(p.roots.roots().iter().copied());
    cuts.push(1.0);
    cuts.extend(g.breakpoints());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rule = GaussRule::new(PAIRING_NODES);
    Ok(rule.integrate_panels(|x| p.series.eval(x) * g.eval(x), &cuts))
}

/// `int_{-1}^{1} f g` by composite Gauss-Legendre split at both breakpoint sets.
pub fn exact_pairing(f: &FunctionSpec, g: &FunctionSpec) -> f64 {
    let mut bps = f.breakpoints();
    bps.extend(g.breakpoints());
    let cuts = panel_cuts(-1.0, 1.0, EXACT_PANELS, &bps);
    GaussRule::new(PAIRING_NODES).integrate_panels(|x| f.eval(x) * g.eval(x), &cuts)
}

/// Parses a test-functional token: `1`, `x`, `xK`, or any function name.
pub fn parse_test_function(token: &str) -> Result<FunctionSpec> {
    let t = token.trim();
    if t == "1" {
        return FunctionSpec::poly(vec![1.0]);
    }
    if let Some(rest) = t.strip_prefix('x') {
        let k: usize = if rest.is_empty() {
            1
        } else {
            rest.parse()
                .map_err(|_| invalid(format!("cannot parse test function '{t}'")))?
        };
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        return FunctionSpec::poly(c);
    }
    t.parse()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakStarRow {
    pub n: usize,
    pub test: String,
    pub pairing: f64,
    pub exact: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakStarStudy {
    pub function: String,
    pub rows: Vec<WeakStarRow>,
    /// `(n, sup |p_n| / sup |f|, converged)`.
    pub degrees: Vec<(usize, f64, bool)>,
    /// `max_n sup |p_n| / sup |f|`.
    pub empirical_c: f64,
}

impl WeakStarStudy {
    /// Pairing errors for one test function, in degree order.
    pub fn errors_for(&self, test: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.test == test).map(|r| r.error).collect()
    }
}

fn sampled_sup(series: &ChebSeries, roots: &[f64], per_piece: usize) -> f64 {
    let mut cuts = vec![-1.0];
    cuts.extend_from_slice(roots);
    cuts.push(1.0);
    cuts.windows(2)
        .flat_map(|w| (0..=per_piece).map(move |i| w[0] + (w[1] - w[0]) * i as f64 / per_piece as f64))
        .map(|x| series.eval(x).abs())
        .fold(0.0, f64::max)
}

pub fn weakstar_demo(
    f: &FunctionSpec,
    degrees: &[usize],
    tests: &[FunctionSpec],
    config: &ApproxConfig,
) -> Result<WeakStarStudy> {
    if degrees.is_empty() {
        return Err(invalid("degree list is empty"));
    }
    if tests.is_empty() {
        return Err(invalid("test function list is empty"));
    }
    for &n in degrees {
        check_degree(n)?;
    }
    let exact: Vec<f64> = tests.iter().map(|g| exact_pairing(f, g)).collect();
    let norm = f.sup_norm();
    let per_degree: Vec<(Vec<WeakStarRow>, (usize, f64, bool))> = degrees
        .par_iter()
        .map(|&n| {
            let p = weak_approximant(f, n, config)?;
            let rows = tests
                .iter()
                .zip(&exact)
                .map(|(g, &e)| {
                    let v = pairing(&p, g)?;
                    Ok(WeakStarRow {
                        n,
                        test: g.name(),
                        pairing: v,
                        exact: e,
                        error: (v - e).abs(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let ratio = sampled_sup(&p.series, p.roots.roots(), 8) / if norm > 0.0 { norm } else { 1.0 };
            Ok((rows, (n, ratio, p.solve.converged)))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut degree_rows = Vec::new();
    for (r, d) in per_degree {
        rows.extend(r);
        degree_rows.push(d);
    }
    let empirical_c = degree_rows.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(WeakStarStudy {
        function: f.name(),
        rows,
        degrees: degree_rows,
        empirical_c,
    })
}

/// A maximal interval of `{|q| >= tau}` on which `q` has the given sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignedInterval {
    pub lo: f64,
    pub hi: f64,
    pub positive: bool,
}

const BISECT_STEPS: usize = 64;

fn log_derivative(z: &[f64], x: f64) -> f64 {
    z.iter().map(|&zk| 1.0 / (x - zk)).sum()
}

/// The unique critical point of a real-rooted polynomial between consecutive roots `a < b`.
pub fn critical_point_between(z: &[f64], a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (a, b);
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        if log_derivative(z, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection for the crossing of `|q| = tau` on `[lo, hi]` where `|q|` is monotone.
fn crossing(roots: &PerturbedRoots, tau: f64, mut lo: f64, mut hi: f64, rising: bool) -> f64 {
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        if (eval_perturbed(roots, mid).abs() >= tau) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The set `{x in [-1, 1] : |q(x)| >= tau}` for the real-rooted `q` with the given roots.
///
/// Between consecutive roots `|q|` has exactly one critical point (where
/// `q'/q = sum 1/(x - z_k)` vanishes), and outside the extreme roots it is
/// monotone, so each piece is found by bisection.
pub fn superlevel_set(roots: &PerturbedRoots, tau: f64) -> Result<Vec<SignedInterval>> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(invalid(format!("threshold must be positive, got {tau}")));
    }
    let z = roots.roots();
    if z[0] < -1.0 || z[z.len() - 1] > 1.0 {
        return Err(invalid("level sets need every root in [-1, 1]"));
    }
    let mut out = Vec::new();
    let q_left = eval_perturbed(roots, -1.0);
    if z[0] > -1.0 && q_left.abs() >= tau {
        out.push(SignedInterval {
            lo: -1.0,
            hi: crossing(roots, tau, -1.0, z[0], false),
            positive: q_left > 0.0,
        });
    }
    let interior: Vec<Option<SignedInterval>> = z
        .par_windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let c = critical_point_between(z, a, b);
            let peak = eval_perturbed(roots, c);
            (peak.abs() >= tau).then(|| SignedInterval {
                lo: crossing(roots, tau, a, c, true),
                hi: crossing(roots, tau, c, b, false),
                positive: peak > 0.0,
            })
        })
        .collect();
    out.extend(interior.into_iter().flatten());
    let q_right = eval_perturbed(roots, 1.0);
    if z[z.len() - 1] < 1.0 && q_right.abs() >= tau {
        out.push(SignedInterval {
            lo: crossing(roots, tau, z[z.len() - 1], 1.0, true),
            hi: 1.0,
            positive: q_right > 0.0,
        });
    }
    Ok(out)
}

/// `|{x in [-1, 1] : |q(x)| < tau}|`.
pub fn sublevel_measure(roots: &PerturbedRoots, tau: f64) -> Result<f64> {
    let covered: f64 = superlevel_set(roots, tau)?.iter().map(|s| s.hi - s.lo).sum();
    Ok(2.0 - covered)
}

/// Densities of `{q > level}` and `{q < -level}` inside `[lo, hi]`.
pub fn sign_densities(pieces: &[SignedInterval], lo: f64, hi: f64) -> (f64, f64) {
    let (mut pos, mut neg) = (0.0, 0.0);
    for s in pieces {
        let overlap = (s.hi.min(hi) - s.lo.max(lo)).max(0.0);
        if s.positive {
            pos += overlap;
        } else {
            neg += overlap;
        }
    }
    (pos / (hi - lo), neg / (hi - lo))
}

/// Limit of `|{|T_n| < tau}|` as `n -> infinity`: `(4 / pi) arcsin(tau)`.
pub fn unperturbed_limit_measure(tau: f64) -> f64 {
    4.0 / PI * tau.min(1.0).asin()
}

pub const DYADIC_QUARTERS: [(f64, f64); 4] = [(-1.0, -0.5), (-0.5, 0.0), (0.0, 0.5), (0.5, 1.0)];

/// Sign level used for the density sets.
pub const DENSITY_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    pub n: usize,
    pub tau: f64,
    /// Measure for the normalized derivative `T_n(., y)`.
    pub measure: f64,
    /// The same measure for `T_n` itself.
    pub unperturbed: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub positive: f64,
    pub negative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceStudy {
    pub function: String,
    pub levels: Vec<LevelRow>,
    pub densities: Vec<DensityRow>,
    /// `(n, max |y_k|, converged)`.
    pub perturbations: Vec<(usize, f64, bool)>,
}

/// Level-set statistics of `T_n(., y)`, the derivative of the approximant divided by its scale.
pub fn divergence_stats(
    f: &FunctionSpec,
    degrees: &[usize],
    thresholds: &[f64],
    config: &ApproxConfig,
) -> Result<DivergenceStudy> {
    if degrees.is_empty() {
        return Err(invalid("degree list is empty"));
    }
    if thresholds.is_empty() {
        return Err(invalid("threshold list is empty"));
    }
    if let Some(t) = thresholds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(invalid(format!("threshold must be positive, got {t}")));
    }
    let mut levels = Vec::new();
    let mut densities = Vec::new();
    let mut perturbations = Vec::new();
    for &n in degrees {
        let result = approximate(f, n, config)?;
        let roots = &result.derivative_roots;
        let plain = PerturbedRoots::from_roots(build_grid(n)?.roots().to_vec())?;
        for &tau in thresholds {
            levels.push(LevelRow {
                n,
                tau,
                measure: sublevel_measure(roots, tau)?,
                unperturbed: sublevel_measure(&plain, tau)?,
                limit: unperturbed_limit_measure(tau),
            });
        }
        let pieces = superlevel_set(roots, DENSITY_LEVEL)?;
        for (lo, hi) in DYADIC_QUARTERS {
            let (positive, negative) = sign_densities(&pieces, lo, hi);
            densities.push(DensityRow {
                n,
                lo,
                hi,
                positive,
                negative,
            });
        }
        perturbations.push((n, result.solve.y.norm(), result.converged()));
    }
    Ok(DivergenceStudy {
        function: f.name(),
        levels,
        densities,
        perturbations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degree_checks() {
        assert!(check_degree(201).is_ok());
        let err = check_degree(200).unwrap_err().to_string();
        assert!(err.contains("degree must be ≡ 1 (mod 8)"), "{err}");
        assert!(check_degree(1).is_err());
    }

    #[test]
    fn abs_at_moderate_degree() {
        let r = approximate(&FunctionSpec::abs(), 105, &ApproxConfig::default()).unwrap();
        assert!(r.converged());
        assert!(r.sup_error <= 13.0 / 105.0, "{}", r.sup_error);
        assert!(r.max_matched_residual() <= 1e-8);
        assert!(r.critical_point_check().passed());
        assert!(r.derivative_mismatch <= 1e-9);
        assert!(r.max_derivative <= 2.0 * r.scale_factor);
        assert_abs_diff_eq!(r.eval(0.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn linear_targets_are_constant() {
        let f = FunctionSpec::poly(vec![0.0, 0.02]).unwrap();
        let cfg = ApproxConfig::default();
        let r = approximate(&f, 33, &cfg).unwrap();
        for a in &r.targets {
            assert_abs_diff_eq!(*a, 0.02 / r.scale_factor, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(r.scale_factor, 0.02 / cfg.level, epsilon = 1e-15);
    }

    #[test]
    fn constant_function_has_zero_targets() {
        let f = FunctionSpec::poly(vec![0.7]).unwrap();
        let r = approximate(&f, 33, &ApproxConfig::default()).unwrap();
        assert!(r.targets.iter().all(|&a| a == 0.0));
        assert_eq!(r.lipschitz, 0.0);
        assert_eq!(r.anchor, 0.7);
        assert!(r.max_matched_residual() <= 1e-8);
    }

    #[test]
    fn sign_is_rejected_for_uniform_approximation() {
        assert!(approximate(&FunctionSpec::sign(), 33, &ApproxConfig::default()).is_err());
    }

    #[test]
    fn matched_endpoint_chain() {
        assert_eq!(matched_endpoints(4, &[]), vec![true; 5]);
        assert_eq!(matched_endpoints(4, &[1]), vec![false, true, true, true, true]);
        assert_eq!(matched_endpoints(4, &[2]), vec![false, false, true, true, true]);
        assert_eq!(matched_endpoints(4, &[4, 3]), vec![true, true, true, false, false]);
    }

    #[test]
    fn line_fit() {
        let fit = fit_line(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fit.intercept, 1.0, epsilon = 1e-15);
        assert!(fit_line(&[(1.0, 1.0)]).is_none());
    }

    #[test]
    fn test_function_tokens() {
        assert_eq!(parse_test_function("1").unwrap(), FunctionSpec::poly(vec![1.0]).unwrap());
        assert_eq!(parse_test_function("x").unwrap(), FunctionSpec::poly(vec![0.0, 1.0]).unwrap());
        assert_eq!(
            parse_test_function("x2").unwrap(),
            FunctionSpec::poly(vec![0.0, 0.0, 1.0]).unwrap()
        );
        assert_eq!(parse_test_function("sin:2").unwrap(), FunctionSpec::sin(2.0).unwrap());
        assert!(parse_test_function("xq").is_err());
    }

    #[test]
    fn unperturbed_level_measure_matches_angular_oracle() {
        let grid = build_grid(401).unwrap();
        let roots = PerturbedRoots::from_roots(grid.roots().to_vec()).unwrap();
        let m = sublevel_measure(&roots, 0.5).unwrap();
        assert!((m - 2.0 / 3.0).abs() < 1e-3, "{m}");
        // densities of {T_n > 1/2} tend to 1/3 everywhere
        let pieces = superlevel_set(&roots, 0.5).unwrap();
        for (lo, hi) in DYADIC_QUARTERS {
            let (p, q) = sign_densities(&pieces, lo, hi);
            assert!((p - 1.0 / 3.0).abs() < 0.01 && (q - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn superlevel_set_on_a_cubic() {
        // q = 4 x^3 - 3 x = T_3; |T_3| >= 1/2 where |cos 3 theta| >= 1/2
        let grid = build_grid(3).unwrap();
        let roots = PerturbedRoots::from_roots(grid.roots().to_vec()).unwrap();
        let m = sublevel_measure(&roots, 0.5).unwrap();
        // |T_3(x)| < 1/2 iff theta in bands around pi/6, pi/2, 5pi/6 of half-width pi/18
        let oracle: f64 = [1.0, 3.0, 5.0]
            .iter()
            .map(|c| (c * PI / 6.0 + PI / 18.0).cos() - (c * PI / 6.0 - PI / 18.0).cos())
            .map(f64::abs)
            .sum();
        assert_abs_diff_eq!(m, oracle, epsilon = 1e-12);
    }
}
