use heisenspec::group_core::GroupKernel;
use heisenspec::nonlocal_grid_solver::{build_kernel, KernelShape};
use heisenspec::spherical_transform::*;
use num_complex::Complex64;
use std::time::Instant;

fn coarse_grid() -> SpectralGrid {
    SpectralGrid::graded(
        1,
        GradedGridParams {
            lambda_max: 20.0,
            n_lambda: 200,
            k_max: 500,
            xi_cut: 150.0,
            ..Default::default()
        },
    )
    .unwrap()
}

#[test]
fn roundtrip_default_grid_and_refinement() {
    let fine = SpectralGrid::default_for(1);
    let coarse = coarse_grid();
    for (name, f) in TEST_PROFILES {
        let t0 = Instant::now();
        let err = roundtrip_error(f, 1, 8.0, 12.0, 256, 256, &fine).unwrap();
        let elapsed = t0.elapsed();
        let err_coarse = roundtrip_error(f, 1, 8.0, 12.0, 128, 128, &coarse).unwrap();
        eprintln!("{name}: coarse {err_coarse:.3e} default {err:.3e} ({elapsed:?})");
        assert!(err <= 1e-3);
        assert!(err < err_coarse);
    }
}

#[test]
fn forward_is_linear_and_bounded() {
    let grid = SpectralGrid::uniform(1, 20.0, 40, 30).unwrap();
    let (a, b) = (1.5, -0.75);
    let f = RadialProfile::sample(1, 8.0, 12.0, 128, 128, TEST_PROFILES[0].1);
    let g = RadialProfile::sample(1, 8.0, 12.0, 128, 128, TEST_PROFILES[3].1);
    let fg = f.with_values(&f.values * a + &g.values * b);
    let cf = forward(&f, &grid).unwrap();
    let cg = forward(&g, &grid).unwrap();
    let cfg = forward(&fg, &grid).unwrap();
    let scale = cf.max_abs().max(cg.max_abs());
    for (x, (y, z)) in cfg.values.iter().zip(cf.values.iter().zip(cg.values.iter())) {
        assert!((x - (y * a + z * b)).norm() <= 1e-13 * scale);
    }
    // |f̂| ≤ ‖f‖_{L¹}, the L¹ norm by the same quadrature (f ≥ 0)
    let l1 = f.lp_norm(1.0);
    assert!(cf.max_abs() <= l1 * (1.0 + 1e-12), "{} vs {l1}", cf.max_abs());
}

#[test]
fn conjugate_symmetry_against_reflected_quadrature() {
    let grid = SpectralGrid::uniform(1, 20.0, 40, 30).unwrap();
    let pos_only = SpectralGrid::with_nodes(1, grid.lambda.clone(), grid.weight.clone(), 30, f64::INFINITY, false);
    let f = RadialProfile::sample(1, 8.0, 12.0, 128, 128, |r, s| (1.0 + s) * (-r * r - s * s).exp());
    // f̂(-λ,k) = transform of f(r,-s) at +λ, computed as an independent quadrature
    let reflected = f.resampled(|r, s| (1.0 - s) * (-r * r - s * s).exp());
    let c = forward(&f, &grid).unwrap();
    let cr = forward(&reflected, &pos_only).unwrap();
    for i in 0..grid.len() {
        for k in 0..=30 {
            let minus = c.values[[grid.row(false, i), k]];
            let plus = c.values[[grid.row(true, i), k]];
            let indep = cr.values[[pos_only.row(true, i), k]];
            assert!((minus - plus.conj()).norm() <= 1e-13);
            assert!((minus - indep).norm() <= 1e-13);
        }
    }
    assert!(c.conjugate_asymmetry() <= 1e-13);
}

#[test]
fn sigma_norm_of_the_example_multiplier() {
    let grid = SpectralGrid::default_for(1);
    let c = SpectralCoefficients::from_fn(&grid, |l, k| Complex64::new((-l.abs() * (2 * k + 1) as f64).exp(), 0.0));
    let got = sigma_norm(&c);
    // both signs of λ: 2·Σ_k (2k+1)^{-2} = π²/4
    let want = std::f64::consts::PI.powi(2) / 4.0;
    assert!((got / want - 1.0).abs() <= 0.02, "{got} vs {want}");
    assert!((sigma_norm(&c.scale(2.0)) - 2.0 * got).abs() <= 1e-12 * got);
    assert_eq!(sigma_norm(&SpectralCoefficients::zeros(&grid)), 0.0);
}

#[test]
fn inverse_of_zero_and_identity_multiplier() {
    let grid = coarse_grid();
    let skel = RadialProfile::skeleton(1, 8.0, 12.0, 64, 64);
    assert_eq!(inverse(&SpectralCoefficients::zeros(&grid), &skel).unwrap().sup_norm(), 0.0);
    let f = skel.resampled(TEST_PROFILES[0].1);
    let c = forward(&f, &grid).unwrap();
    let mut evolved = c.clone();
    for row in 0..grid.rows() {
        let l = grid.signed_lambda(row).abs();
        for k in 0..=grid.k_max {
            evolved.values[[row, k]] *= (-l * (2 * k + 1) as f64 * 0.0).exp();
        }
    }
    assert_eq!(inverse(&evolved, &f).unwrap(), inverse(&c, &f).unwrap());
}

#[test]
fn tail_violation_is_reported() {
    let grid = SpectralGrid::uniform(1, 5.0, 5, 3).unwrap();
    let f = RadialProfile::sample(1, 2.0, 2.0, 32, 32, |r, s| (-(r * r + s * s) / 8.0).exp());
    assert!(!forward(&f, &grid).unwrap().warnings.is_empty());
    let g = RadialProfile::sample(1, 8.0, 12.0, 64, 64, TEST_PROFILES[0].1);
    assert!(forward(&g, &grid).unwrap().warnings.is_empty());
}

#[test]
fn convolution_becomes_a_product() {
    let j = build_kernel(1, KernelShape::BallBump, 0.5).unwrap();
    let grid = SpectralGrid::uniform(1, 10.0, 20, 20).unwrap();
    let skel = RadialProfile::skeleton(1, 4.0, 6.0, 128, 128);
    let gauss = |r: f64, s: f64| (-r * r - s * s).exp();
    let fhat = forward(&skel.resampled(gauss), &grid).unwrap().max_abs();
    let t0 = Instant::now();
    let d = convolution_multiplier_check(gauss, &j, &skel, &grid).unwrap();
    eprintln!("gaussian: {d:.3e} of {fhat:.3e} ({:?})", t0.elapsed());
    assert!(d <= 5e-3 * fhat);
    assert_eq!(convolution_multiplier_check(|_, _| 0.0, &j, &skel, &grid).unwrap(), 0.0);
    // self-convolution of the kernel profile
    let jf = |r: f64, s: f64| j.value(&[r, 0.0], s);
    let jhat = forward(&skel.resampled(jf), &grid).unwrap().max_abs();
    let d = convolution_multiplier_check(jf, &j, &skel, &grid).unwrap();
    eprintln!("self: {d:.3e} of {jhat:.3e}");
    assert!(d <= 5e-3 * jhat);
}
