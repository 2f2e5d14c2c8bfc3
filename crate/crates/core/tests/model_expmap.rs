use std::f64::consts::TAU;

use carnot_geodesics::expmap::{exp_map, g, geodesic_point, i_inverse_coeffs, is_pole};
use carnot_geodesics::{dilate, BlockVec, Covector, GroupSpec, Point};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = GroupSpec> {
    (1usize..=4)
        .prop_flat_map(|k| (prop::collection::vec(0.5f64..5.0, k), prop::collection::vec(1usize..=3, k)))
        .prop_filter_map("alphas must be distinct", |(mut a, m)| {
            a.sort_by(f64::total_cmp);
            GroupSpec::new(a, m).ok()
        })
}

fn spec_and_vecs() -> impl Strategy<Value = (GroupSpec, Vec<f64>, Vec<f64>)> {
    spec_strategy().prop_flat_map(|s| {
        let d = s.horizontal_dim();
        (Just(s), prop::collection::vec(-3.0f64..3.0, d), prop::collection::vec(-3.0f64..3.0, d))
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn off_pole(spec: &GroupSpec, lambda: f64, dist: f64) -> bool {
    spec.alphas().iter().all(|&a| {
        let y = lambda * a;
        let m = (y / TAU).round();
        m == 0.0 || (y - TAU * m).abs() > dist
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn apply_a_is_skew((spec, v, w) in spec_and_vecs()) {
        let av = spec.apply_a(&v).unwrap();
        let aw = spec.apply_a(&w).unwrap();
        let lhs = dot(&av, &w);
        let rhs = -dot(&v, &aw);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn apply_a_is_linear((spec, v, w) in spec_and_vecs(), c in -2.0f64..2.0) {
        let sum: Vec<f64> = v.iter().zip(&w).map(|(a, b)| c * a + b).collect();
        let lhs = spec.apply_a(&sum).unwrap();
        let av = spec.apply_a(&v).unwrap();
        let aw = spec.apply_a(&w).unwrap();
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (c * av[i] + aw[i])).abs() <= 1e-12 * (1.0 + lhs[i].abs()));
        }
    }

    #[test]
    fn dilation_by_powers_of_two_is_exact(
        (spec, v, _) in spec_and_vecs(),
        z in -50.0f64..50.0,
        e in -6i32..=6,
    ) {
        let p = Point::from_flat(&spec, v, z).unwrap();
        let eps = 2f64.powi(e);
        let back = dilate(&dilate(&p, eps).unwrap(), 1.0 / eps).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn group_spec_serde_round_trip(spec in spec_strategy()) {
        let js = serde_json::to_string(&spec).unwrap();
        let back: GroupSpec = serde_json::from_str(&js).unwrap();
        for (a, b) in back.alphas().iter().zip(spec.alphas()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn point_serde_round_trip((spec, v, _) in spec_and_vecs(), z in -10.0f64..10.0) {
        let p = Point::from_flat(&spec, v, z).unwrap();
        let back: Point = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn inverse_recovers_u((spec, u, _) in spec_and_vecs(), lambda in -30.0f64..30.0) {
        prop_assume!(off_pole(&spec, lambda, 1e-3));
        let cov = Covector::from_flat(&spec, u, lambda).unwrap();
        let p = exp_map(&spec, &cov).unwrap();
        for j in 0..spec.k() {
            let back = i_inverse_coeffs(lambda * spec.alpha(j)).unwrap().apply(p.x.block(j));
            let uj = cov.u.block(j);
            let scale = dot(uj, uj).sqrt().max(1e-300);
            let err = back.iter().zip(uj).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-9 * scale);
        }
    }

    #[test]
    fn g_is_odd(lambda in -100.0f64..100.0) {
        prop_assert_eq!(g(-lambda).value().map(f64::to_bits), g(lambda).value().map(|v| (-v).to_bits()));
    }

    #[test]
    fn g_lower_bound(lambda in -100.0f64..100.0) {
        prop_assume!(!is_pole(lambda));
        let l = lambda.abs();
        if let Some(v) = g(l).value() {
            prop_assert!(v > l / 8.0 - std::f64::consts::PI / 8.0);
        }
    }

    #[test]
    fn vertical_component_identity((spec, u, _) in spec_and_vecs(), lambda in -30.0f64..30.0) {
        prop_assume!(lambda.abs() > 1e-3 && off_pole(&spec, lambda, 1e-3));
        let cov = Covector::from_flat(&spec, u, lambda).unwrap();
        let p = exp_map(&spec, &cov).unwrap();
        for j in 0..spec.k() {
            let a = spec.alpha(j);
            let y = lambda * a;
            let lhs = (y - y.sin()) / (2.0 * lambda * lambda * a) * cov.u.block_norm_sq(j);
            let rhs = a * g(y).value().unwrap() * p.x.block_norm_sq(j);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1e-12));
        }
    }

    #[test]
    fn geodesic_endpoint_is_exp_map((spec, u, _) in spec_and_vecs(), lambda in -30.0f64..30.0) {
        let cov = Covector::from_flat(&spec, u, lambda).unwrap();
        let p = exp_map(&spec, &cov).unwrap();
        let q = geodesic_point(&spec, &cov, 1.0).unwrap();
        prop_assert!(p.distance(&q) <= 4.0 * f64::EPSILON * p.norm().max(1.0));
    }

    #[test]
    fn exp_map_is_dilation_equivariant(
        (spec, u, _) in spec_and_vecs(),
        lambda in -30.0f64..30.0,
        eps in 0.1f64..10.0,
    ) {
        let cov = Covector::from_flat(&spec, u.clone(), lambda).unwrap();
        let scaled = Covector::from_flat(&spec, u.iter().map(|v| v * eps).collect(), lambda).unwrap();
        let p = dilate(&exp_map(&spec, &cov).unwrap(), eps).unwrap();
        let q = exp_map(&spec, &scaled).unwrap();
        prop_assert!(p.distance(&q) <= 1e-12 * p.norm().max(1.0));
    }
}

#[test]
fn mismatched_layouts_are_rejected() {
    let spec = GroupSpec::new(vec![1.0, 2.0], vec![1, 2]).unwrap();
    assert!(BlockVec::from_flat(&spec, vec![0.0; 5]).is_err());
    assert!(Point::new(&spec, &[vec![1.0, 0.0]], 0.0).is_err());
    let other = GroupSpec::heisenberg(1).unwrap();
    let cov = Covector::from_flat(&other, vec![1.0, 0.0], 1.0).unwrap();
    assert!(exp_map(&spec, &cov).is_err());
}
