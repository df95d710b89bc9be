use std::f64::consts::PI;

use chebcrit::cheb::{cheb_interpolate, extreme_points};
use chebcrit::perturb::admissible;
use chebcrit::*;
use proptest::prelude::*;

fn group_degree() -> impl Strategy<Value = usize> {
    (1usize..=40).prop_map(|m| 8 * m + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpolation_recovers_coefficients(coeffs in prop::collection::vec(-1.0f64..1.0, 2..40)) {
        let series = ChebSeries::new(coeffs.clone()).unwrap();
        let values: Vec<f64> = extreme_points(coeffs.len() - 1).iter().map(|&x| series.eval(x)).collect();
        let back = cheb_interpolate(&values).unwrap();
        for (a, b) in back.coeffs().iter().zip(&coeffs) {
            prop_assert!((a - b).abs() <= 1e-13 * coeffs.len() as f64);
        }
    }

    #[test]
    fn derivative_undoes_antiderivative(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..30),
        anchor in -1.0f64..1.0,
        value in -5.0f64..5.0,
        x in -1.0f64..1.0,
    ) {
        let series = ChebSeries::new(coeffs).unwrap();
        let q = series.antiderivative(anchor, value);
        prop_assert!((q.eval(anchor) - value).abs() <= 1e-12);
        prop_assert!((q.derivative().eval(x) - series.eval(x)).abs() <= 1e-11);
    }

    #[test]
    fn basis_products_split_into_sum_and_difference(n in 0usize..60, m in 0usize..60) {
        let prod = ChebSeries::basis(n).mul(&ChebSeries::basis(m));
        let expected = ChebSeries::basis(n + m).add(&ChebSeries::basis(n.abs_diff(m))).scale(0.5);
        let len = prod.coeffs().len().max(expected.coeffs().len());
        for i in 0..len {
            let a = prod.coeffs().get(i).copied().unwrap_or(0.0);
            let b = expected.coeffs().get(i).copied().unwrap_or(0.0);
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn interval_lengths_grow_toward_the_origin(n in 4usize..400, k_frac in 0.0f64..1.0, j_frac in 0.0f64..1.0) {
        let grid = build_grid(n).unwrap();
        let half = n / 2;
        let k = 1 + ((half - 1) as f64 * k_frac) as usize;
        let j = ((half - k) as f64 * j_frac) as usize;
        let ratio = grid.interval_length(k + j) / grid.interval_length(k);
        prop_assert!(ratio >= 1.0 - 1e-12);
        prop_assert!(ratio <= (1.0 + 0.5 * PI * j as f64 / k as f64) * (1.0 + 1e-12));
    }

    #[test]
    fn nodal_area_average_is_pinned(n in 2usize..600, k_frac in 0.0f64..1.0) {
        let grid = build_grid(n).unwrap();
        let k = 1 + ((n - 2) as f64 * k_frac) as usize;
        let (lo, hi) = grid.interval(k);
        let avg = ChebSeries::basis(n).integrate(lo, hi).unwrap().abs() / (hi - lo);
        let nf = n as f64;
        prop_assert!(avg >= 2.0 / PI * (1.0 - 1e-12));
        prop_assert!(avg <= (2.0 / PI + PI / (6.0 * nf * nf)) * (1.0 + 1e-12));
    }

    #[test]
    fn delta_cancels_the_linear_term(eps in -0.1f64..0.1, a in 0.8f64..1.5) {
        let tp = ThreePoint::new(eps, a).unwrap();
        prop_assert!(tp.linear_residual().abs() <= 1e-13);
        prop_assert!(tp.lambda >= 0.5 / a && tp.lambda <= 2.0 / a);
        prop_assert!(tp.delta * eps >= 0.0);
    }

    #[test]
    fn distortion_sign_pattern(eps in 0.001f64..0.1, a in 0.8f64..1.2, x in -6.0f64..6.0, flip in any::<bool>()) {
        let eps = if flip { -eps } else { eps };
        let q = (x + a) * x * (x - 1.0);
        prop_assume!(q.abs() > 1e-9);
        let r = distortion_3pt(eps, a, x).unwrap();
        let upper_side = x <= -a || (0.0..=1.0).contains(&x);
        let expect_above = upper_side == (eps > 0.0);
        if expect_above {
            prop_assert!(r >= 1.0);
        } else {
            prop_assert!(r <= 1.0);
        }
    }

    #[test]
    fn perturbed_cubic_decreases_in_epsilon(
        e1 in -0.1f64..0.1,
        gap in 1e-4f64..0.1,
        a in 0.8f64..1.2,
        x in -3.0f64..3.0,
    ) {
        let e2 = (e1 + gap).min(0.1);
        prop_assume!(e2 > e1);
        let p1 = ThreePoint::new(e1, a).unwrap().perturbed_cubic(x);
        let p2 = ThreePoint::new(e2, a).unwrap().perturbed_cubic(x);
        prop_assert!(p1 > p2);
    }

    #[test]
    fn group_moves_preserve_root_sum_and_order(n in group_degree(), seed in any::<u64>()) {
        let grid = build_grid(n).unwrap();
        let count = grid.group_count().unwrap();
        let mut state = seed;
        let y: Vec<f64> = (1..=count)
            .map(|k| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.2;
                if admissible(&grid, k, v) { v } else { 0.0 }
            })
            .collect();
        let z = perturbed_roots(&grid, &PerturbationVector::new(y.clone(), 0.1).unwrap()).unwrap();
        let roots = z.roots();
        prop_assert!(roots.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(roots.iter().all(|v| (-1.0..=1.0).contains(v)));
        for k in 1..=count {
            let moved: f64 = (4 * k - 2..=4 * k).map(|i| roots[i - 1] - grid.root(i)).sum();
            prop_assert!(moved.abs() <= 1e-15);
            let (lo, hi) = grid.group(k);
            prop_assert!(roots[4 * k - 4] == lo && roots[4 * k] == hi);
            let h = grid.interval_length(4 * k - 1);
            prop_assert!((roots[4 * k - 1] - grid.root(4 * k) - y[k - 1] * h).abs() <= 1e-15);
        }
    }

    #[test]
    fn series_matches_product_form(n in group_degree(), m_frac in 0.0f64..1.0, value in -0.1f64..0.1, x in -1.0f64..1.0) {
        let grid = build_grid(n).unwrap();
        let count = grid.group_count().unwrap();
        let m = 1 + ((count - 1) as f64 * m_frac) as usize;
        prop_assume!(admissible(&grid, m, value));
        let y = PerturbationVector::single(count, m, value, 0.1).unwrap();
        let z = perturbed_roots(&grid, &y).unwrap();
        let series = to_series(&z).unwrap();
        prop_assert!((series.eval(x) - eval_perturbed(&z, x)).abs() <= 1e-11);
    }

    #[test]
    fn single_group_inverse_round_trips(n in group_degree(), k_frac in 0.0f64..1.0, s in 0.0f64..1.0) {
        let grid = build_grid(n).unwrap();
        let count = grid.group_count().unwrap();
        let k = 1 + ((count - 1) as f64 * k_frac) as usize;
        let response = GroupResponse::new(&grid, k, 0.1).unwrap();
        let y = response.y_lo + s * (response.y_hi - response.y_lo);
        let target = response.eval(y).unwrap();
        let back = f_inverse_1d(&grid, k, target, 0.1).unwrap();
        prop_assert!((response.eval(back).unwrap() - target).abs() <= 1e-12);
    }

    #[test]
    fn reduction_maps_the_interval(alpha in -5.0f64..5.0, width in 0.1f64..10.0, t in -1.0f64..1.0) {
        let beta = alpha + width;
        let f = FunctionSpec::abs().reduced_to(alpha, beta).unwrap();
        let u = alpha + (beta - alpha) * (t + 1.0) / 2.0;
        prop_assert!((f.eval(t) - u.abs()).abs() <= 1e-12);
        prop_assert!((f.lipschitz().unwrap() - width / 2.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn forward_targets_are_recovered(m in 2usize..8, seed in any::<u64>()) {
        let n = 8 * m + 1;
        let grid = build_grid(n).unwrap();
        let count = grid.group_count().unwrap();
        let mut state = seed;
        let y: Vec<f64> = (1..=count)
            .map(|k| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.06;
                if admissible(&grid, k, v) { v } else { 0.0 }
            })
            .collect();
        let targets = group_averages(&grid, &PerturbationVector::new(y, 0.1).unwrap()).unwrap();
        let report = solve_targets(&grid, &TargetAverages::new(targets.clone(), 0.1).unwrap(), &SolveConfig::default()).unwrap();
        prop_assert!(report.converged);
        let got = group_averages(&grid, &report.y).unwrap();
        for (g, t) in got.iter().zip(&targets) {
            prop_assert!((g - t).abs() <= 1e-9);
        }
    }

    #[test]
    fn approximant_keeps_critical_points_inside(
        m in 2usize..12,
        knots in prop::collection::vec(-1.0f64..1.0, 1..5),
    ) {
        let n = 8 * m + 1;
        let mut pts = vec![(-1.0, 0.0)];
        for (i, v) in knots.iter().enumerate() {
            pts.push((-1.0 + 2.0 * (i + 1) as f64 / (knots.len() + 1) as f64, 0.3 * v));
        }
        pts.push((1.0, 0.0));
        let f = FunctionSpec::piecewise_linear(pts).unwrap();
        let result = approximate(&f, n, &ApproxConfig::default()).unwrap();
        prop_assert!(result.critical_point_check().passed());
        prop_assert_eq!(result.derivative_roots.n(), n);
    }
}
