use heisenspec::group_core::{
    group_convolve, group_convolve_signed, Field, GroupKernel, LatticeDomain, TwistSign,
};
use heisenspec::nonlocal_grid_solver::*;
use heisenspec::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_kernel() -> KernelSpec {
    build_kernel(1, KernelShape::BallBump, 1.0).unwrap()
}

/// 5³ Ω at h = 0.5 with a collar wide enough for the unit kernel.
fn small_lattice(j: &KernelSpec) -> LatticeDomain {
    LatticeDomain::box_for_kernel(1, 0.5, 0.5, 5, 5, j.r_z, j.r_s, 0).unwrap()
}

#[test]
fn built_kernel_moments_match_closed_forms() {
    for n in 1..=3 {
        for r_z in [0.5, 1.0, 2.3] {
            let j = build_kernel(n, KernelShape::BallBump, r_z).unwrap();
            // R_s = R_z √(7 / (2(n+3))) and C₁ = R_z² / (2(n+3))
            let rs = r_z * (7.0 / (2.0 * (n as f64 + 3.0))).sqrt();
            assert!((j.r_s - rs).abs() < 1e-12 * rs, "n={n} R_z={r_z}");
            let c1 = r_z * r_z / (2.0 * (n as f64 + 3.0));
            assert!((j.c1 - c1).abs() < 1e-14 * c1);
            let (mz, ms) = (j.second_moment_z(), j.second_moment_s());
            assert!((mz - ms).abs() < 1e-8 * mz);
            assert_eq!(j.mass, 1.0);
            assert!(j.j00() > 0.0);
        }
    }
    assert!(build_kernel(2, KernelShape::ProductBump, 1.0).is_err());
    assert!(build_kernel(1, KernelShape::BallBump, -1.0).is_err());
}

#[test]
fn lattice_quadrature_of_moments_converges() {
    let j = unit_kernel();
    let (m0, mx, ms) = lattice_moments(&j, 0.02, 0.02);
    assert!((m0 - 1.0).abs() < 1e-5, "mass {m0}");
    assert!((mx - j.c1).abs() < 1e-5, "x moment {mx}");
    assert!((ms - j.c1).abs() < 1e-5, "s moment {ms}");
    // odd and mixed moments vanish by the parity of the lattice
    let odd = j.lattice_sum(0.05, 0.05, |w, s| w[0] * s + w[0] * w[1] + s);
    assert!(odd.abs() < 1e-14);
}

#[test]
fn rescaled_kernel_scales_mass_and_support() {
    let j = unit_kernel();
    for eps in [1.0, 0.5, 0.1] {
        let je = rescaled_kernel(&j, eps).unwrap();
        assert!((je.mass - 2.0 / j.c1).abs() < 1e-12);
        assert!((je.r_z - eps).abs() < 1e-15);
        assert!((je.r_s - eps * eps * j.r_s).abs() < 1e-15);
        // ∫J^ε x₁² = 2ε²
        let m2 = je.mass * je.second_moment_z();
        assert!((m2 - 2.0 * eps * eps).abs() < 1e-12 * eps * eps);
    }
    let je = rescaled_kernel(&j, 0.5).unwrap();
    let (m0, _, _) = lattice_moments(&je, 0.01, 0.004);
    assert!((m0 - je.mass).abs() < 1e-4 * je.mass);
    assert!(rescaled_kernel(&j, 0.0).is_err());
}

#[test]
fn kernel_matrix_structure() {
    let j = unit_kernel();
    let lat = small_lattice(&j);
    let k = build_kernel_matrix(&j, &lat).unwrap();
    assert!(k.symmetric);
    assert_eq!(k.max_asymmetry, 0.0);
    let vol = lat.cell_volume();
    for i in 0..k.len() {
        assert_eq!(k.entries[(i, i)], j.j00() * vol);
    }
    assert!(k.entries.iter().all(|v| *v >= 0.0));
    // row sums stay below ∫J up to the quadrature slack of this coarse lattice
    assert!(k.max_row_sum() <= 1.0 + 0.2, "row sum {}", k.max_row_sum());
    // far pairs vanish
    let (a, b) = (0, lat.node_count() - 1);
    assert_eq!(k.entries[(a, b)], 0.0);
}

#[test]
fn kernel_matrix_rejects_thin_collar() {
    let j = unit_kernel();
    let lat = LatticeDomain::centered_box(1, 0.5, 0.5, 5, 5, 1, 1).unwrap();
    assert!(matches!(
        build_kernel_matrix(&j, &lat),
        Err(Error::SupportOverflow { .. })
    ));
}

#[test]
fn symmetry_negative_controls() {
    let j = unit_kernel();
    let shifted = ShiftedKernel {
        base: j.clone(),
        shift: 0.3,
    };
    let lat = LatticeDomain::box_for_kernel(1, 0.5, 0.5, 5, 5, j.r_z, j.r_s + 0.3, 0).unwrap();
    let std = build_kernel_matrix_signed(&j, &lat, TwistSign::Standard).unwrap();
    let flip = build_kernel_matrix_signed(&j, &lat, TwistSign::Flipped).unwrap();
    assert!(std.symmetric && flip.symmetric);
    let broken = build_kernel_matrix_signed(&shifted, &lat, TwistSign::Flipped).unwrap();
    assert!(!broken.symmetric);
    assert!(broken.max_asymmetry > 1e-3 * j.j00() * lat.cell_volume());
}

#[test]
fn group_convolve_matches_dense_product_bitwise() {
    let j = unit_kernel();
    let lat = small_lattice(&j);
    let k = build_kernel_matrix(&j, &lat).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = Field {
        values: (0..lat.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        t: 0.0,
    };
    for sign in [TwistSign::Standard, TwistSign::Flipped] {
        let kk = build_kernel_matrix_signed(&j, &lat, sign).unwrap();
        let c = group_convolve_signed(&f, &j, &lat, sign).unwrap();
        let dense = kk.matvec(&f.values);
        for p in lat.omega_nodes() {
            assert_eq!(c.values[p].to_bits(), dense[p].to_bits(), "node {p}");
        }
    }
    let c = group_convolve(&f, &j, &lat).unwrap();
    assert_eq!(c.values[lat.omega_nodes()[3]], k.matvec(&f.values)[lat.omega_nodes()[3]]);
}

#[test]
fn dirichlet_trivial_and_positive() {
    let j = unit_kernel();
    let lat = small_lattice(&j);
    let zero = Field::zeros(&lat);
    for scheme in [Scheme::ExactExpm, Scheme::Rk4, Scheme::Euler, Scheme::Picard] {
        let tr = solve_dirichlet(&j, &lat, &zero, &Boundary::Zero, 1.0, 0.25, scheme).unwrap();
        assert!(tr.states.iter().all(|s| s.iter().all(|v| *v == 0.0)));
    }
    let u0 = Field::sample(&lat, |c| (-(c[0] * c[0] + c[1] * c[1] + c[2] * c[2])).exp());
    let g = |c: &[f64]| 0.5 + 0.1 * c[0].sin();
    let tr = solve_dirichlet(&j, &lat, &u0, &Boundary::Static(&g), 2.0, 0.1, Scheme::Rk4).unwrap();
    assert!(tr.min_value() >= -1e-12);
}

#[test]
fn euler_rejects_unstable_steps() {
    let j = unit_kernel();
    let lat = small_lattice(&j);
    let u0 = Field::constant(&lat, 1.0);
    let r = solve_dirichlet(&j, &lat, &u0, &Boundary::Zero, 4.0, 2.0, Scheme::Euler);
    assert!(matches!(r, Err(Error::UnstableStep { .. })));
}

#[test]
fn schemes_agree_with_picard() {
    let j = unit_kernel();
    let lat = small_lattice(&j);
    let u0 = Field::sample(&lat, |c| (1.0 - c[0] * c[0]).max(0.0) + c[2]);
    let g = |c: &[f64], t: f64| (c[0] + c[1]).cos() * (-t).exp();
    let b = Boundary::Dynamic(&g);
    let pic = solve_dirichlet(&j, &lat, &u0, &b, 1.0, 0.01, Scheme::Picard).unwrap();
    let rk4 = solve_dirichlet(&j, &lat, &u0, &b, 1.0, 0.01, Scheme::Rk4).unwrap();
    let eul = solve_dirichlet(&j, &lat, &u0, &b, 1.0, 0.01, Scheme::Euler).unwrap();
    let diff = |a: &Trajectory, b: &Trajectory| {
        a.states
            .iter()
            .zip(&b.states)
            .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max)
    };
    assert_eq!(pic.times.len(), rk4.times.len());
    assert!(diff(&pic, &rk4) <= 1e-8, "rk4 vs picard {}", diff(&pic, &rk4));
    let de = diff(&pic, &eul);
    assert!(de > 1e-5 && de < 1e-1, "euler vs picard {de}");

    let gs = |c: &[f64]| (c[0] + c[1]).cos();
    let bs = Boundary::Static(&gs);
    let ex = solve_dirichlet(&j, &lat, &u0, &bs, 1.0, 0.1, Scheme::ExactExpm).unwrap();
    let p2 = solve_dirichlet(&j, &lat, &u0, &bs, 1.0, 0.1, Scheme::Picard).unwrap();
    assert!(diff(&ex, &p2) <= 1e-10, "expm vs picard {}", diff(&ex, &p2));
}

#[test]
fn neumann_preserves_constants_and_mass() {
    let j = unit_kernel();
    let lat = small_lattice(&j);
    let c = Field::constant(&lat, 2.5);
    let tr = solve_neumann(&j, &lat, &c, 3.0, 0.5, Scheme::ExactExpm).unwrap();
    for s in &tr.states {
        assert!(s.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u0 = Field {
        values: (0..lat.node_count()).map(|_| rng.gen_range(0.0..1.0)).collect(),
        t: 0.0,
    };
    let tr = solve_neumann(&j, &lat, &u0, 10.0, 0.5, Scheme::ExactExpm).unwrap();
    let m0 = tr.mass(0);
    for i in 0..tr.len() {
        assert!((tr.mass(i) - m0).abs() <= 1e-10 * m0.abs());
    }
    let tr = solve_neumann(&j, &lat, &u0, 10.0, 0.01, Scheme::Rk4).unwrap();
    for i in 0..tr.len() {
        assert!((tr.mass(i) - m0).abs() <= 1e-6 * m0.abs());
    }
}

fn rescaled_lattice(j: &KernelSpec, eps_min: f64, eps_max: f64, omega: usize) -> LatticeDomain {
    let (hz, hs) = spacing_for(j, eps_min, 8.0);
    let je = rescaled_kernel(j, eps_max).unwrap();
    LatticeDomain::box_for_kernel(1, hz, hs, omega, omega, je.r_z, je.r_s, 1).unwrap()
}

#[test]
fn rescaled_operator_on_monomials() {
    let j = unit_kernel();
    let lat = rescaled_lattice(&j, 0.1, 0.4, 8);
    let cases: [(fn(&[f64]) -> f64, f64); 5] = [
        (|_| 1.0, 0.0),
        (|c| c[0], 0.0),
        (|c| c[1], 0.0),
        (|c| c[2], 0.0),
        (|c| c[0] * c[0], 2.0),
    ];
    for eps in [0.4, 0.2, 0.1] {
        for (k, (f, want)) in cases.iter().enumerate() {
            let v = Field::sample(&lat, f);
            let out = apply_rescaled_operator(&j, eps, &v, &lat).unwrap();
            let err = lat
                .omega_nodes()
                .iter()
                .map(|&p| (out.values[p] - want).abs())
                .fold(0.0, f64::max);
            if k == 0 {
                assert_eq!(err, 0.0);
            }
            assert!(err <= 1e-3, "eps={eps} case {k}: {err}");
        }
    }
}

#[test]
fn rescaled_operator_enforces_resolution() {
    let j = unit_kernel();
    let (hz, hs) = spacing_for(&j, 0.2, 4.0);
    let lat = LatticeDomain::box_for_kernel(1, hz, hs, 6, 6, 0.2, 0.2, 1).unwrap();
    let v = Field::constant(&lat, 1.0);
    assert!(matches!(
        apply_rescaled_operator(&j, 0.2, &v, &lat),
        Err(Error::UnderResolved { .. })
    ));
    let u0 = Field::zeros(&lat);
    let lat2 = rescaled_lattice(&j, 0.2, 0.2, 6);
    let u0b = Field::zeros(&lat2);
    let r = solve_rescaled_dirichlet(&j, 0.2, &lat2, &u0b, &Boundary::Zero, 0.1, 0.01, Scheme::Rk4);
    assert!(matches!(r, Err(Error::UnstableStep { .. })));
    let _ = u0;
}

#[test]
fn rescaled_dirichlet_zero_and_ordered() {
    let j = unit_kernel();
    let lat = rescaled_lattice(&j, 0.2, 0.2, 6);
    let op = RescaledOperator::new(&j, 0.2, &lat).unwrap();
    let dt = rescaled_rk4_step(&op);
    let zero = Field::zeros(&lat);
    let tr = solve_rescaled_dirichlet(&j, 0.2, &lat, &zero, &Boundary::Zero, 0.02, dt, Scheme::Rk4)
        .unwrap();
    assert!(tr.states.iter().all(|s| s.iter().all(|v| *v == 0.0)));
    let lo = Field::sample(&lat, |c| (c[0] * 7.0).sin());
    let mut hi = lo.clone();
    for (i, v) in hi.values.iter_mut().enumerate() {
        if lat.is_omega(i) {
            *v += 0.05;
        }
    }
    let g = |c: &[f64]| (c[0] * 7.0).sin();
    let a = solve_rescaled_dirichlet(&j, 0.2, &lat, &hi, &Boundary::Static(&g), 0.02, dt, Scheme::Rk4)
        .unwrap();
    let b = solve_rescaled_dirichlet(&j, 0.2, &lat, &lo, &Boundary::Static(&g), 0.02, dt, Scheme::Rk4)
        .unwrap();
    let rep = check_comparison(&a, &b).unwrap();
    assert!(rep.min_difference >= -1e-12, "{rep:?}");
}

#[test]
fn comparison_reports() {
    let j = unit_kernel();
    let lat = small_lattice(&j);
    let u0 = Field::sample(&lat, |c| (-(c[0] * c[0] + c[2] * c[2])).exp());
    let a = solve_dirichlet(&j, &lat, &u0, &Boundary::Zero, 1.0, 0.25, Scheme::ExactExpm).unwrap();
    let rep = check_comparison(&a, &a).unwrap();
    assert_eq!(rep.min_difference, 0.0);
    let one = |_: &[f64]| 1.0;
    let b = solve_dirichlet(&j, &lat, &u0, &Boundary::Static(&one), 1.0, 0.25, Scheme::ExactExpm)
        .unwrap();
    assert!(check_comparison(&b, &a).unwrap().min_difference >= -1e-12);
    let short = solve_dirichlet(&j, &lat, &u0, &Boundary::Zero, 0.5, 0.25, Scheme::ExactExpm).unwrap();
    assert!(check_comparison(&a, &short).is_err());
}

#[test]
fn kernel_trait_surface() {
    let j = unit_kernel();
    assert_eq!(j.n(), 1);
    assert_eq!(j.value(&[2.0, 0.0], 0.0), 0.0);
    assert!((j.value(&[0.0, 0.0], 0.0) - j.j00()).abs() < 1e-15);
    assert_eq!(j.value(&[0.3, 0.1], 0.2), j.value(&[0.3, 0.1], -0.2));
}

#[test]
fn hundred_random_ordered_pairs() {
    let j = unit_kernel();
    let lat = small_lattice(&j);
    let rep = ordered_pair_sweep(&j, &lat, 100, 2024, 2.0, 0.25, Scheme::ExactExpm).unwrap();
    assert_eq!(rep.pairs, 100);
    assert!(rep.min_difference >= -1e-12, "{rep:?}");
    let rep = ordered_pair_sweep(&j, &lat, 10, 5, 1.0, 0.05, Scheme::Rk4).unwrap();
    assert!(rep.min_difference >= -1e-12, "{rep:?}");
}

#[test]
fn twist_sign_is_detected_by_the_drift() {
    // L(x s) = -y; the flipped group law produces +y instead
    let j = unit_kernel();
    let lat = rescaled_lattice(&j, 0.2, 0.2, 8);
    let v = Field::sample(&lat, |c| c[0] * c[2]);
    let mut c = vec![0.0; 3];
    let mut worst = [0.0f64; 2];
    for (slot, sign) in [TwistSign::Standard, TwistSign::Flipped].into_iter().enumerate() {
        let op = RescaledOperator::with_sign(&j, 0.2, &lat, sign).unwrap();
        let mut out = vec![0.0; op.omega().len()];
        op.apply(&v.values, &mut out);
        for (&p, got) in op.omega().iter().zip(&out) {
            lat.coords(p, &mut c);
            worst[slot] = worst[slot].max((got + c[1]).abs());
        }
    }
    let ymax = lat.omega_nodes().iter().map(|&p| { lat.coords(p, &mut c); c[1].abs() }).fold(0.0, f64::max);
    assert!(worst[0] <= 1e-3, "{worst:?}");
    assert!(worst[1] >= ymax, "{worst:?} {ymax}");
}
