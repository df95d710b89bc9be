//! Target functions: builtins, monomial polynomials and piecewise-linear data.
//!
//! Every spec may carry an affine pre-map `x -> shift + scale x`, which is how
//! a problem on `[alpha, beta]` is reduced to `[-1, 1]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionKind {
    Abs,
    Sign,
    Relu,
    /// `sin(k x)`.
    Sin { k: f64 },
    /// Monomial coefficients `c_0 + c_1 x + ...`.
    Poly { coeffs: Vec<f64> },
    /// Knots `(x, value)`, strictly increasing in `x`.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    /// User override for the Lipschitz bound.
    pub lipschitz_bound: Option<f64>,
    pub shift: f64,
    pub scale: f64,
}

impl FunctionSpec {
    pub fn new(kind: FunctionKind) -> Result<Self> {
        match &kind {
            FunctionKind::Sin { k } if !k.is_finite() => return Err(invalid("sin frequency is not finite")),
            FunctionKind::Poly { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("polynomial needs finite coefficients"));
                }
            }
            FunctionKind::PiecewiseLinear { knots } => validate_knots(knots)?,
            _ => {}
        }
        Ok(Self {
            kind,
            lipschitz_bound: None,
            shift: 0.0,
            scale: 1.0,
        })
    }

    pub fn abs() -> Self {
        Self::new(FunctionKind::Abs).unwrap()
    }

    pub fn sign() -> Self {
        Self::new(FunctionKind::Sign).unwrap()
    }

    pub fn relu() -> Self {
        Self::new(FunctionKind::Relu).unwrap()
    }

    pub fn sin(k: f64) -> Result<Self> {
        Self::new(FunctionKind::Sin { k })
    }

    pub fn poly(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(FunctionKind::Poly { coeffs })
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(FunctionKind::PiecewiseLinear { knots })
    }

    pub fn with_lipschitz(mut self, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(invalid(format!("Lipschitz bound must be non-negative, got {bound}")));
        }
        self.lipschitz_bound = Some(bound);
        Ok(self)
    }

    /// The spec seen through `t -> alpha + (beta - alpha)(t + 1) / 2`, so `[-1, 1]` covers `[alpha, beta]`.
    pub fn reduced_to(&self, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha < beta) {
            return Err(invalid(format!("interval [{alpha}, {beta}] is empty or not finite")));
        }
        let half = 0.5 * (beta - alpha);
        let mid = 0.5 * (alpha + beta);
        let mut out = self.clone();
        out.shift = self.shift + self.scale * mid;
        out.scale = self.scale * half;
        out.lipschitz_bound = self.lipschitz_bound.map(|b| b * half);
        Ok(out)
    }

    fn to_base(&self, x: f64) -> f64 {
        self.shift + self.scale * x
    }

    fn from_base(&self, u: f64) -> f64 {
        (u - self.shift) / self.scale
    }

    /// Image of `[-1, 1]` under the pre-map.
    fn base_domain(&self) -> (f64, f64) {
        let (a, b) = (self.to_base(-1.0), self.to_base(1.0));
        (a.min(b), a.max(b))
    }

    pub fn eval(&self, x: f64) -> f64 {
        base_eval(&self.kind, self.to_base(x))
    }

    /// A Lipschitz bound on `[-1, 1]`; `None` for discontinuous functions.
    pub fn lipschitz(&self) -> Option<f64> {
        if let Some(b) = self.lipschitz_bound {
            return Some(b);
        }
        let (lo, hi) = self.base_domain();
        let base = match &self.kind {
            FunctionKind::Abs | FunctionKind::Relu => 1.0,
            FunctionKind::Sign => return None,
            FunctionKind::Sin { k } => k.abs(),
            FunctionKind::Poly { coeffs } => {
                let m = lo.abs().max(hi.abs());
                coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(j, c)| j as f64 * c.abs() * m.powi(j as i32 - 1))
                    .sum()
            }
            FunctionKind::PiecewiseLinear { knots } => knots
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
        };
        Some(base * self.scale.abs())
    }

    /// Points in `(-1, 1)` where the function or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        let base: Vec<f64> = match &self.kind {
            FunctionKind::Abs | FunctionKind::Sign | FunctionKind::Relu => vec![0.0],
            FunctionKind::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
            _ => Vec::new(),
        };
        let mut out: Vec<f64> = base
            .into_iter()
            .map(|u| self.from_base(u))
            .filter(|&x| x > -1.0 && x < 1.0)
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// `int_a^b f` in closed form.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let (ua, ub) = (self.to_base(a), self.to_base(b));
        base_primitive_diff(&self.kind, ua, ub) / self.scale
    }

    /// `sup |f|` on `[-1, 1]`.
    pub fn sup_norm(&self) -> f64 {
        let (lo, hi) = self.base_domain();
        match &self.kind {
            FunctionKind::Abs => lo.abs().max(hi.abs()),
            FunctionKind::Sign => {
                if lo < 0.0 || hi > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FunctionKind::Relu => hi.max(0.0),
            FunctionKind::Sin { k } => {
                // |sin| peaks where k u = pi/2 + j pi
                let (a, b) = ((k * lo).min(k * hi), (k * lo).max(k * hi));
                let first = ((a - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI).ceil();
                if std::f64::consts::FRAC_PI_2 + first * std::f64::consts::PI <= b {
                    1.0
                } else {
                    a.sin().abs().max(b.sin().abs())
                }
            }
            FunctionKind::Poly { coeffs } => poly_sup(coeffs, lo, hi),
            FunctionKind::PiecewiseLinear { .. } => {
                let mut pts = self.breakpoints();
                pts.extend([-1.0, 1.0]);
                pts.iter().map(|&x| self.eval(x).abs()).fold(0.0, f64::max)
            }
        }
    }

    pub fn name(&self) -> String {
        let base = match &self.kind {
            FunctionKind::Abs => "abs".to_string(),
            FunctionKind::Sign => "sign".to_string(),
            FunctionKind::Relu => "relu".to_string(),
            FunctionKind::Sin { k } => format!("sin:{k}"),
            FunctionKind::Poly { coeffs } => {
                let parts: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                format!("poly:{}", parts.join(","))
            }
            FunctionKind::PiecewiseLinear { knots } => format!("pwl[{}]", knots.len()),
        };
        if self.shift == 0.0 && self.scale == 1.0 {
            base
        } else {
            format!("{base}@({}+{}x)", self.shift, self.scale)
        }
    }

    /// Monomial coefficients on `[-1, 1]` when the function is a polynomial.
    pub fn as_polynomial(&self) -> Option<Vec<f64>> {
        let FunctionKind::Poly { coeffs } = &self.kind else {
            return None;
        };
        // expand sum c_j (shift + scale x)^j
        let mut out = vec![0.0; coeffs.len()];
        let mut power = vec![1.0];
        for &c in coeffs {
            for (i, p) in power.iter().enumerate() {
                out[i] += c * p;
            }
            let mut next = vec![0.0; power.len() + 1];
            for (i, p) in power.iter().enumerate() {
                next[i] += self.shift * p;
                next[i + 1] += self.scale * p;
            }
            power = next;
        }
        Some(out)
    }
}

fn validate_knots(knots: &[(f64, f64)]) -> Result<()> {
    if knots.len() < 2 {
        return Err(invalid("piecewise-linear function needs at least two knots"));
    }
    if knots.iter().any(|(x, v)| !x.is_finite() || !v.is_finite()) {
        return Err(invalid("knot is not finite"));
    }
    if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(invalid("knots must be strictly increasing in x"));
    }
    Ok(())
}

/// Checks that the knots span the interval the spec is evaluated on.
pub fn require_span(spec: &FunctionSpec) -> Result<()> {
    if let FunctionKind::PiecewiseLinear { knots } = &spec.kind {
        let (lo, hi) = spec.base_domain();
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if knots[0].0 > lo + slack || knots[knots.len() - 1].0 < hi - slack {
            return Err(invalid(format!(
                "knots span [{}, {}] but must cover [{lo}, {hi}]",
                knots[0].0,
                knots[knots.len() - 1].0
            )));
        }
    }
    Ok(())
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_sup(coeffs: &[f64], lo: f64, hi: f64) -> f64 {
    let samples = 4096;
    (0..=samples)
        .map(|i| horner(coeffs, lo + (hi - lo) * i as f64 / samples as f64).abs())
        .fold(0.0, f64::max)
}

fn base_eval(kind: &FunctionKind, u: f64) -> f64 {
    match kind {
        FunctionKind::Abs => u.abs(),
        FunctionKind::Sign => {
            if u > 0.0 {
                1.0
            } else if u < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        FunctionKind::Relu => u.max(0.0),
        FunctionKind::Sin { k } => (k * u).sin(),
        FunctionKind::Poly { coeffs } => horner(coeffs, u),
        FunctionKind::PiecewiseLinear { knots } => pwl_eval(knots, u),
    }
}

fn pwl_eval(knots: &[(f64, f64)], u: f64) -> f64 {
    let i = knots.partition_point(|k| k.0 <= u);
    let seg = i.clamp(1, knots.len() - 1);
    let (x0, v0) = knots[seg - 1];
    let (x1, v1) = knots[seg];
    v0 + (v1 - v0) * (u - x0) / (x1 - x0)
}

fn pwl_primitive(knots: &[(f64, f64)], u: f64) -> f64 {
    // integral from the first knot to u, extending end segments linearly
    let mut acc = 0.0;
    let first = knots[0].0;
    if u <= first {
        let v = pwl_eval(knots, u);
        return -(first - u) * 0.5 * (v + knots[0].1);
    }
    for w in knots.windows(2) {
        let (x0, v0) = w[0];
        let (x1, v1) = w[1];
        if u <= x1 {
            return acc + (u - x0) * 0.5 * (v0 + pwl_eval(knots, u));
        }
        acc += (x1 - x0) * 0.5 * (v0 + v1);
    }
    let (xl, vl) = knots[knots.len() - 1];
    acc + (u - xl) * 0.5 * (vl + pwl_eval(knots, u))
}

fn base_primitive(kind: &FunctionKind, u: f64) -> f64 {
    match kind {
        FunctionKind::Abs => 0.5 * u * u.abs(),
        FunctionKind::Sign => u.abs(),
        FunctionKind::Relu => 0.5 * u.max(0.0).powi(2),
        FunctionKind::Sin { k } => {
            if *k == 0.0 {
                0.0
            } else {
                -(k * u).cos() / k
            }
        }
        FunctionKind::Poly { coeffs } => {
            let integrated: Vec<f64> = std::iter::once(0.0)
                .chain(coeffs.iter().enumerate().map(|(j, c)| c / (j as f64 + 1.0)))
                .collect();
            horner(&integrated, u)
        }
        FunctionKind::PiecewiseLinear { knots } => pwl_primitive(knots, u),
    }
}

fn base_primitive_diff(kind: &FunctionKind, a: f64, b: f64) -> f64 {
    if let FunctionKind::Sin { k } = kind {
        if *k != 0.0 {
            // cos a - cos b without cancellation
            return 2.0 * (0.5 * k * (a + b)).sin() * (0.5 * k * (b - a)).sin() / k;
        }
    }
    base_primitive(kind, b) - base_primitive(kind, a)
}

impl FromStr for FunctionSpec {
    type Err = Error;

    /// `abs`, `sign`, `relu`, `sin:K` (or `sin_k:K`), `poly:c0,c1,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let number = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("cannot parse number '{t}' in function '{s}'")))
        };
        match (head, rest) {
            ("abs", None) => Ok(Self::abs()),
            ("sign", None) => Ok(Self::sign()),
            ("relu", None) => Ok(Self::relu()),
            ("sin" | "sin_k", Some(k)) => Self::sin(number(k)?),
            ("poly", Some(list)) => Self::poly(list.split(',').map(number).collect::<Result<Vec<_>>>()?),
            _ => Err(invalid(format!(
                "unknown function '{s}' (expected abs, sign, relu, sin:K or poly:c0,c1,...)"
            ))),
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
