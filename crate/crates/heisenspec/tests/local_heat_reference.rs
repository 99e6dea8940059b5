use heisenspec::group_core::{Field, LatticeDomain};
use heisenspec::local_heat_reference::*;
use heisenspec::nonlocal_grid_solver::{
    build_kernel, rescaled_kernel, spacing_for, Boundary, KernelShape, KernelSpec, Trajectory,
};
use heisenspec::Error;

fn unit_box(h: f64) -> LatticeDomain {
    // Ω = [-1, 1]³ with a one-cell collar
    let m = (2.0 / h).round() as usize + 1;
    LatticeDomain::centered_box(1, h, h, m, m, 1, 1).unwrap()
}

fn max_abs(t: &Trajectory) -> f64 {
    (0..t.len()).map(|i| t.sup_norm(i)).fold(0.0, f64::max)
}

#[test]
fn constants_are_fixed_points() {
    let lat = unit_box(0.25);
    let u0 = Field::constant(&lat, 2.5);
    let g = |_: &[f64]| 2.5;
    let dt = HeatOperator::new(&lat).unwrap().explicit_limit();
    for (scheme, step) in [(HeatScheme::Explicit, dt), (HeatScheme::ImplicitEuler, 0.05)] {
        let tr = solve_heat_dirichlet(&lat, &u0, &Boundary::Static(&g), 0.2, step, scheme, HeatStencil::Centered).unwrap();
        for st in &tr.states {
            assert!(st.iter().all(|v| (v - 2.5).abs() < 1e-13), "{scheme:?}");
        }
    }
}

#[test]
fn explicit_step_bound_enforced() {
    let lat = unit_box(0.25);
    let op = HeatOperator::new(&lat).unwrap();
    let u0 = Field::zeros(&lat);
    let r = solve_heat_dirichlet(&lat, &u0, &Boundary::Zero, 0.1, 1.01 * op.explicit_limit(), HeatScheme::Explicit, HeatStencil::Centered);
    assert!(matches!(r, Err(Error::UnstableStep { .. })));
    // isotropic form: h²/(2(2n + ¼max|z|² + slack)) with a nonnegative slack
    let h: f64 = 0.25;
    let zmax2 = 2.0;
    assert!(op.explicit_limit() <= h * h / (2.0 * (2.0 + 0.25 * zmax2)) + 1e-15);
    let tr = solve_heat_dirichlet(&lat, &u0, &Boundary::Zero, 0.1, op.explicit_limit(), HeatScheme::Explicit, HeatStencil::Centered).unwrap();
    assert_eq!(max_abs(&tr), 0.0);
}

/// Ω = [-1,1]² × [-a,a] with h_s = h²/2, so every left-invariant step is whole cells.
fn group_box(h: f64, a: f64) -> LatticeDomain {
    let hs = 0.5 * h * h;
    let mz = (2.0 / h).round() as usize + 1;
    let ms = (2.0 * a / hs).round() as usize + 1;
    LatticeDomain::centered_box(1, h, hs, mz, ms, 1, (1.0 / h).round() as usize).unwrap()
}

fn bump(c: &[f64]) -> f64 {
    (-4.0 * (c[0] * c[0] + c[1] * c[1]) - 16.0 * c[2] * c[2]).exp()
}

fn range(t: &Trajectory) -> (f64, f64) {
    let max = t.states.iter().flatten().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
    (t.min_value(), max)
}

#[test]
fn maximum_principle_with_left_invariant_stencil() {
    let lat = group_box(0.25, 0.5);
    let u0 = Field::sample(&lat, bump);
    let g = |c: &[f64]| 0.1 * (1.0 + c[2]);
    let op = HeatOperator::with_stencil(&lat, HeatStencil::LeftInvariant).unwrap();
    let dt = op.explicit_limit();
    assert!((dt - 0.25f64.powi(2) / 4.0).abs() < 1e-15);
    for (scheme, step) in [(HeatScheme::Explicit, dt), (HeatScheme::ImplicitEuler, 0.05)] {
        let tr = solve_heat_dirichlet(&lat, &u0, &Boundary::Static(&g), 0.5, step, scheme, HeatStencil::LeftInvariant)
            .unwrap();
        let (min, max) = range(&tr);
        assert!(min >= 0.0 && max <= 1.0, "{scheme:?}: [{min}, {max}]");
    }
}

#[test]
fn centered_stencil_has_no_maximum_principle() {
    // negative control: the mixed-derivative weights let a nonnegative bump undershoot
    let lat = unit_box(0.125);
    let u0 = Field::sample(&lat, |c| (-4.0 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2])).exp());
    let g = |c: &[f64]| 0.1 * (1.0 + c[2]);
    let dt = HeatOperator::new(&lat).unwrap().explicit_limit();
    let tr = solve_heat_dirichlet(&lat, &u0, &Boundary::Static(&g), 0.3, dt, HeatScheme::Explicit, HeatStencil::Centered)
        .unwrap();
    assert!(tr.min_value() < -1e-3, "{}", tr.min_value());
}

#[test]
fn left_invariant_stencil_needs_whole_cell_shifts() {
    let lat = LatticeDomain::centered_box(1, 0.25, 0.3, 5, 5, 1, 4).unwrap();
    assert!(HeatOperator::with_stencil(&lat, HeatStencil::LeftInvariant).is_err());
    let thin = LatticeDomain::centered_box(1, 0.25, 0.03125, 9, 9, 1, 1).unwrap();
    assert!(matches!(
        HeatOperator::with_stencil(&thin, HeatStencil::LeftInvariant),
        Err(Error::StencilOutOfBounds { .. })
    ));
}

fn mode(c: &[f64], t: f64) -> f64 {
    eigenmode_solution(1, 2.0, c, t)
}

/// Final state of a solve with the eigenmode as data and exterior values.
fn eigenmode_run(lat: &LatticeDomain, dt: f64, t_end: f64, scheme: HeatScheme, stencil: HeatStencil) -> Trajectory {
    let u0 = Field::sample(lat, |c| mode(c, 0.0));
    let g = |c: &[f64], t: f64| mode(c, t);
    solve_heat_dirichlet(lat, &u0, &Boundary::Dynamic(&g), t_end, dt, scheme, stencil).unwrap()
}

/// Values of `fine` at the nodes of `coarse` (both final states).
fn restrict(fine_lat: &LatticeDomain, fine: &Trajectory, coarse_lat: &LatticeDomain, coarse: &Trajectory) -> Vec<(f64, f64)> {
    let mut pos = vec![usize::MAX; fine_lat.node_count()];
    for (k, &p) in fine.omega.iter().enumerate() {
        pos[p] = k;
    }
    let mut c = vec![0.0; 3];
    let mut mi = vec![0usize; 3];
    coarse
        .omega
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            coarse_lat.coords(p, &mut c);
            for a in 0..3 {
                mi[a] = ((c[a] - fine_lat.lower()[a]) / fine_lat.h()[a]).round() as usize;
            }
            let q = pos[fine_lat.index(&mi)];
            (coarse.last()[k], fine.last()[q])
        })
        .collect()
}

#[test]
fn centered_self_convergence_is_second_order() {
    let hs = [0.25, 0.125, 0.0625];
    let lats: Vec<LatticeDomain> = hs.iter().map(|h| unit_box(*h)).collect();
    let dt = HeatOperator::new(&lats[2]).unwrap().explicit_limit();
    let runs: Vec<Trajectory> = lats
        .iter()
        .map(|l| eigenmode_run(l, dt, 0.1, HeatScheme::Explicit, HeatStencil::Centered))
        .collect();
    let gap = |i: usize| {
        restrict(&lats[i + 1], &runs[i + 1], &lats[i], &runs[i])
            .iter()
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
    };
    let (e1, e2) = (gap(0), gap(1));
    let order = (e1 / e2).log2();
    assert!(order >= 1.8, "self-convergence order {order} ({e1:e}, {e2:e})");
    // and the finest run is close to the exact mode
    let mut c = vec![0.0; 3];
    let err = runs[2].omega.iter().zip(runs[2].last()).fold(0.0f64, |a, (&p, v)| {
        lats[2].coords(p, &mut c);
        a.max((v - mode(&c, 0.1)).abs())
    });
    assert!(err < 2e-3, "{err}");
}

#[test]
fn left_invariant_stencil_converges_to_the_mode() {
    let err = |h: f64| {
        let lat = group_box(h, 0.5);
        let dt = HeatOperator::with_stencil(&lat, HeatStencil::LeftInvariant).unwrap().explicit_limit();
        let tr = eigenmode_run(&lat, dt, 0.1, HeatScheme::Explicit, HeatStencil::LeftInvariant);
        let mut c = vec![0.0; 3];
        tr.omega.iter().zip(tr.last()).fold(0.0f64, |a, (&p, v)| {
            lat.coords(p, &mut c);
            a.max((v - mode(&c, 0.1)).abs())
        })
    };
    let (e1, e2) = (err(0.25), err(0.125));
    let order = (e1 / e2).log2();
    assert!(order >= 1.8, "order {order} ({e1:e}, {e2:e})");
}

#[test]
fn implicit_and_explicit_agree_to_first_order() {
    let lat = unit_box(0.25);
    // explicit reference with a step far below the implicit ones
    let dt = HeatOperator::new(&lat).unwrap().explicit_limit() / 20.0;
    let a = eigenmode_run(&lat, dt, 0.2, HeatScheme::Explicit, HeatStencil::Centered);
    let gap = |h: f64| {
        let b = eigenmode_run(&lat, h, 0.2, HeatScheme::ImplicitEuler, HeatStencil::Centered);
        a.last().iter().zip(b.last()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    };
    let (g1, g2) = (gap(0.02), gap(0.01));
    assert!(g2 < g1 && g1 < 1e-2, "{g1:e} {g2:e}");
    let ratio = g1 / g2;
    assert!(ratio > 1.6 && ratio < 2.4, "{ratio}");
}

fn unit_kernel() -> KernelSpec {
    build_kernel(1, KernelShape::BallBump, 1.0).unwrap()
}

/// Lattice resolving J^ε for ε_min with a collar wide enough for ε_max.
fn rescaled_lattice(j: &KernelSpec, eps_min: f64, eps_max: f64, omega: usize) -> LatticeDomain {
    let (hz, hs) = spacing_for(j, eps_min, 8.0);
    let je = rescaled_kernel(j, eps_max).unwrap();
    LatticeDomain::box_for_kernel(1, hz, hs, omega, omega, je.r_z, je.r_s, 1).unwrap()
}

#[test]
fn consistency_table() {
    let j = unit_kernel();
    let lat = rescaled_lattice(&j, 0.1, 0.4, 8);
    let eps = [0.4, 0.2, 0.1];
    let zero = Field::zeros(&lat);
    let t = consistency_error(&j, &eps, &zero, None, &lat).unwrap();
    assert!(t.iter().all(|r| r.sup_error == 0.0));
    let x2 = Field::sample(&lat, |c| c[0] * c[0]);
    let t = consistency_error(&j, &eps, &x2, None, &lat).unwrap();
    assert!(t.iter().all(|r| r.sup_error <= 1e-3), "{t:?}");
    for (a, b) in [(1.0, 1.0), (1.0, 0.1), (0.5, 0.05)] {
        let (v, lv) = gaussian_test_field(&lat, a, b);
        let t = consistency_error(&j, &eps, &v, Some(&lv), &lat).unwrap();
        let rows: Vec<(f64, f64)> = t.iter().map(|r| (r.eps, r.sup_error)).collect();
        assert!(rows.windows(2).all(|w| w[1].1 < w[0].1), "{rows:?}");
        let order = fitted_order(&rows).unwrap();
        assert!(order >= 0.5, "widths ({a}, {b}): order {order}");
        // the centred-difference L gives the same table up to its O(h²) error
        let fd = consistency_error(&j, &eps, &v, None, &lat).unwrap();
        for (x, y) in t.iter().zip(&fd) {
            assert!((x.sup_error - y.sup_error).abs() < 1e-2 * (1.0 + x.sup_error));
        }
    }
}

#[test]
fn barrier_examples() {
    let j = unit_kernel();
    let lat = rescaled_lattice(&j, 0.2, 0.2, 4);
    let z = Field::zeros(&lat);
    let tr = heisenspec::nonlocal_grid_solver::solve_rescaled_dirichlet(
        &j,
        0.2,
        &lat,
        &z,
        &Boundary::Zero,
        0.01,
        0.001,
        heisenspec::nonlocal_grid_solver::Scheme::Rk4,
    )
    .unwrap();
    let rep = barrier_check(&tr, 0.0, 0.0, 0.2, 0.5).unwrap();
    assert_eq!((rep.violations, rep.max_ratio), (0, 0.0));
    // a boundary mismatch proportional to ε gives K₂ε halving with ε
    let (_, k2) = fit_barrier_constants(&[(0.2, 0.0, 0.2 * 0.3), (0.1, 0.0, 0.1 * 0.3)], 0.5);
    assert!((k2 * 0.1 / (k2 * 0.2) - 0.5).abs() < 0.3 * 0.5);
    assert!(barrier_check(&tr, -1.0, 0.0, 0.2, 0.5).is_err());
}

#[test]
fn rescaled_problems_converge_to_the_heat_mode() {
    let j = unit_kernel();
    let lat = rescaled_lattice(&j, 0.1, 0.4, 16);
    let t0 = std::time::Instant::now();
    let st = convergence_study(&j, &[0.4, 0.2, 0.1], &lat, 4.0, 0.05, 0.5).unwrap();
    println!("{st:#?} {:?}", t0.elapsed());
    assert!(st.rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error));
    assert!(st.order >= 0.5, "order {}", st.order);
    assert!(st.rows.iter().all(|r| r.barrier.violations == 0));
}
