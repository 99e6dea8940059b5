//! Nonlocal Dirichlet, rescaled Dirichlet and Neumann problems on lattice boxes.

mod kernel;
mod matrix;
mod rescaled;
mod time;

pub use kernel::{
    build_kernel, bump, lattice_moments, rescaled_kernel, s_reach, KernelShape, KernelSpec,
    ShiftedKernel,
};
pub use matrix::{
    build_kernel_matrix, build_kernel_matrix_signed, KernelMatrix, LinearGenerator,
    SparseGenerator, DENSE_NODE_LIMIT,
};
pub use rescaled::{apply_rescaled_operator, spacing_for, RescaledOperator, MIN_CELLS_ACROSS};
pub use time::{
    check_comparison, dense_generator, integrate, Boundary, ComparisonReport, Scheme, Trajectory,
    EXPM_NODE_LIMIT, PICARD_NODES, PICARD_TOL, RK4_REAL_AXIS_LIMIT,
};

use crate::error::{Error, Result};
use crate::group_core::{Field, GroupKernel, LatticeDomain, TwistSign};

/// u' = J∗u - u on Ω with exterior nodes pinned to g.
pub fn solve_dirichlet<K: GroupKernel>(
    j: &K,
    lattice: &LatticeDomain,
    u0: &Field,
    g: &Boundary,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<Trajectory> {
    let gen = SparseGenerator::dirichlet(j, lattice, TwistSign::Standard)?;
    integrate(&gen, lattice, u0, g, t_end, dt, scheme)
}

/// u' = Σ_{q∈Ω} K[p][q](u(q) - u(p)).
pub fn solve_neumann<K: GroupKernel>(
    j: &K,
    lattice: &LatticeDomain,
    u0: &Field,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<Trajectory> {
    let gen = SparseGenerator::neumann(j, lattice, TwistSign::Standard)?;
    integrate(&gen, lattice, u0, &Boundary::Zero, t_end, dt, scheme)
}

/// u' = L̃_ε u on Ω with exterior nodes pinned to g. Explicit schemes need dt ≤ 0.1 ε².
#[allow(clippy::too_many_arguments)]
pub fn solve_rescaled_dirichlet(
    j: &KernelSpec,
    eps: f64,
    lattice: &LatticeDomain,
    u0: &Field,
    g: &Boundary,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<Trajectory> {
    let op = RescaledOperator::new(j, eps, lattice)?;
    if matches!(scheme, Scheme::Euler | Scheme::Rk4) && dt > 0.1 * eps * eps {
        return Err(Error::UnstableStep {
            dt,
            limit: 0.1 * eps * eps,
        });
    }
    integrate(&op, lattice, u0, g, t_end, dt, scheme)
}

/// Largest step accepted by `solve_rescaled_dirichlet` with RK4 for this operator.
pub fn rescaled_rk4_step(op: &RescaledOperator) -> f64 {
    (0.1 * op.eps * op.eps).min(RK4_REAL_AXIS_LIMIT / op.spectral_bound())
}

/// Outcome of `ordered_pair_sweep`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepReport {
    pub pairs: usize,
    /// Smallest super - sub over all pairs, nodes and stored times.
    pub min_difference: f64,
    pub worst_pair: usize,
}

/// Solves `pairs` Dirichlet problems with random ordered data (u0 and g drawn per node,
/// the upper datum adding a nonnegative random increment) and reports the worst ordering.
#[allow(clippy::too_many_arguments)]
pub fn ordered_pair_sweep<K: GroupKernel>(
    j: &K,
    lattice: &LatticeDomain,
    pairs: usize,
    seed: u64,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<SweepReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let gen = SparseGenerator::dirichlet(j, lattice, TwistSign::Standard)?;
    let m = lattice.node_count();
    let lookup = |table: &[f64], c: &[f64]| {
        let mut mi = vec![0usize; c.len()];
        for (a, v) in c.iter().enumerate() {
            mi[a] = ((v - lattice.lower()[a]) / lattice.h()[a]).round() as usize;
        }
        table[lattice.index(&mi)]
    };
    let mut rep = SweepReport {
        pairs,
        min_difference: f64::INFINITY,
        worst_pair: 0,
    };
    for pair in 0..pairs {
        let lo: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // every fourth pair is the degenerate case of identical data
        let spread = if pair % 4 == 0 { 0.0 } else { 0.5 };
        let hi: Vec<f64> = lo.iter().map(|v| v + spread * rng.gen_range(0.0..1.0)).collect();
        let (ulo, uhi) = (Field { values: lo.clone(), t: 0.0 }, Field { values: hi.clone(), t: 0.0 });
        let glo = |c: &[f64]| lookup(&lo, c);
        let ghi = |c: &[f64]| lookup(&hi, c);
        let a = integrate(&gen, lattice, &uhi, &Boundary::Static(&ghi), t_end, dt, scheme)?;
        let b = integrate(&gen, lattice, &ulo, &Boundary::Static(&glo), t_end, dt, scheme)?;
        let c = check_comparison(&a, &b)?;
        if c.min_difference < rep.min_difference {
            rep.min_difference = c.min_difference;
            rep.worst_pair = pair;
        }
    }
    Ok(rep)
}
