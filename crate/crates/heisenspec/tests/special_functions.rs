use heisenspec::fit::loglog_slope;
use heisenspec::group_core::{dilate, GroupPoint};
use heisenspec::special_functions::*;
use proptest::prelude::*;

const PAIRS: [(f64, usize); 6] = [(0.5, 0), (0.8, 1), (1.1, 2), (1.4, 0), (1.7, 1), (2.0, 2)];

#[test]
fn eigenrelation_is_second_order() {
    let hs = [0.2, 0.1, 0.05];
    for (lambda, k) in PAIRS {
        let errs: Vec<f64> = hs
            .iter()
            .map(|h| eigenrelation_error(lambda, k, 1, *h, 1.0).unwrap())
            .collect();
        let order = loglog_slope(&hs, &errs).unwrap();
        assert!(order >= 1.8, "λ={lambda} k={k}: {errs:?} order {order}");
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn eigenrelation_rejects_ragged_boxes() {
    assert!(eigenrelation_error(1.0, 0, 1, 0.3, 1.0).is_err());
    assert!(eigenrelation_error(0.0, 0, 1, 0.25, 1.0).is_err());
}

#[test]
fn bessel_first_zero() {
    // bisection on the series between 2 and 3
    let (mut a, mut b) = (2.0f64, 3.0f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if bessel_j(0, a) * bessel_j(0, m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    assert!((a - 2.404826).abs() < 1e-6);
    assert!((a - 2.404825557695773).abs() < 1e-12);
    assert!(bessel_j(0, a).abs() <= 1e-8);
}

#[test]
fn bessel_matches_reference_values() {
    // values from the integral representation J_ν(x) = (1/π)∫₀^π cos(νθ - x sin θ) dθ
    let reference = |nu: usize, x: f64| {
        let m = 20000;
        let h = std::f64::consts::PI / m as f64;
        let f = |t: f64| (nu as f64 * t - x * t.sin()).cos();
        let mut acc = 0.5 * (f(0.0) + f(std::f64::consts::PI));
        for i in 1..m {
            acc += f(i as f64 * h);
        }
        acc * h / std::f64::consts::PI
    };
    for nu in [0usize, 1, 2, 5] {
        for x in [0.5, 3.0, 11.9, 12.1, 20.0, 35.0, 50.0, -7.5] {
            let got = bessel_j(nu, x);
            let want = reference(nu, x);
            assert!((got - want).abs() <= 1e-10, "J_{nu}({x}) = {got} vs {want}");
        }
    }
}

#[test]
fn laguerre_sign_changes() {
    for alpha in 0..3usize {
        for k in 0..8usize {
            let end = (4 * k + 2 * alpha + 4) as f64;
            let m = 4000;
            let mut changes = 0;
            let mut prev = laguerre_normalized(k, alpha, 1e-9);
            for i in 1..=m {
                let v = laguerre_normalized(k, alpha, end * i as f64 / m as f64);
                if v * prev < 0.0 {
                    changes += 1;
                }
                if v != 0.0 {
                    prev = v;
                }
            }
            assert_eq!(changes, k, "k={k} alpha={alpha}");
        }
    }
}

#[test]
fn central_difference_of_eta_vanishes() {
    let h = 0.1;
    for r in [0.0, 0.7, 2.5] {
        for (x, y) in [(0.0, 0.0), (0.3, -1.1), (2.0, 0.4)] {
            let at = |s: f64| eta(r, 1, &GroupPoint::new(vec![x], vec![y], s).unwrap()).unwrap();
            assert_eq!(at(0.4 + h) - at(0.4 - h), 0.0);
        }
    }
}

fn point(n: usize) -> impl Strategy<Value = GroupPoint> {
    (
        prop::collection::vec(-4.0..4.0f64, n),
        prop::collection::vec(-4.0..4.0f64, n),
        -10.0..10.0f64,
    )
        .prop_map(|(x, y, s)| GroupPoint::new(x, y, s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn phi_is_bounded_by_one(lambda in 0.05..6.0f64, neg in any::<bool>(), k in 0usize..40, p in point(1)) {
        let l = if neg { -lambda } else { lambda };
        prop_assert!(phi(l, k, 1, &p).unwrap().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn phi_scaling_law(lambda in 0.1..3.0f64, c in 0.2..5.0f64, k in 0usize..10, p in (1usize..3).prop_flat_map(point)) {
        let a = phi(c * lambda, k, p.n(), &p).unwrap();
        let b = phi(lambda, k, p.n(), &dilate(c, &p).unwrap()).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + (c * lambda * p.s).abs()));
    }

    #[test]
    fn eta_ignores_s(r in 0.0..5.0f64, p in point(2), s2 in -10.0..10.0f64) {
        let mut q = p.clone();
        q.s = s2;
        prop_assert_eq!(eta(r, 2, &p).unwrap(), eta(r, 2, &q).unwrap());
    }
}

#[test]
fn eta_and_phi_at_origin() {
    for n in 1..4 {
        let o = GroupPoint::identity(n);
        for k in 0..5 {
            assert_eq!(phi(1.3, k, n, &o).unwrap().re, 1.0);
        }
        let mut p = o.clone();
        p.s = 3.0;
        assert_eq!(eta(2.0, n, &p).unwrap(), 1.0);
        p.x[0] = 1.5;
        assert_eq!(eta(0.0, n, &p).unwrap(), 1.0);
    }
}
