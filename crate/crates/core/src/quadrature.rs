//! Gauss-Legendre quadrature for integrands that are not polynomials.

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m > 0, "rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 1 { x } else { p1 };
            let prev = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * p - prev) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// A reusable `m`-point rule applied on arbitrary panels.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(m: usize) -> Self {
        let (nodes, weights) = gauss_legendre(m);
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
    }

    /// Sum over the panels delimited by sorted `cuts`.
    pub fn integrate_panels(&self, f: impl Fn(f64) -> f64, cuts: &[f64]) -> f64 {
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| self.integrate(&f, w[0], w[1]))
            .sum()
    }
}

/// Panel cuts: `panels` equal pieces of `[a, b]` refined at every breakpoint inside it.
pub fn panel_cuts(a: f64, b: f64, panels: usize, breakpoints: &[f64]) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .chain(breakpoints.iter().copied().filter(|&x| x > a && x < b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn five_point_rule_matches_table() {
        let (x, w) = gauss_legendre(5);
        assert_abs_diff_eq!(x[4], 0.906_179_845_938_664_0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[3], 0.538_469_310_105_683_1, epsilon = 1e-15);
        assert_abs_diff_eq!(x[2], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[2], 128.0 / 225.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn exact_for_high_degree_monomials() {
        let rule = GaussRule::new(10);
        for d in 0..20 {
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            assert_abs_diff_eq!(rule.integrate(|x| x.powi(d), -1.0, 1.0), exact, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(GaussRule::new(1).integrate(|x| 3.0 * x + 1.0, 0.0, 2.0), 8.0, epsilon = 1e-15);
    }

    #[test]
    fn panels_respect_breakpoints() {
        let cuts = panel_cuts(-1.0, 1.0, 4, &[0.3, 0.0, 5.0]);
        assert_eq!(cuts, vec![-1.0, -0.5, 0.0, 0.3, 0.5, 1.0]);
        let rule = GaussRule::new(4);
        let v = rule.integrate_panels(|x: f64| (x - 0.3).abs(), &cuts);
        assert_abs_diff_eq!(v, (1.3f64.powi(2) + 0.7f64.powi(2)) / 2.0, epsilon = 1e-15);
    }
}
