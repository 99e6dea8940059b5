use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::matrix::LinearGenerator;
use crate::error::{Error, Result};
use crate::group_core::{Field, LatticeDomain};

/// Dense exponentials are refused beyond this many Ω nodes.
pub const EXPM_NODE_LIMIT: usize = 3000;
/// Stability limit of classical RK4 on the negative real axis.
pub const RK4_REAL_AXIS_LIMIT: f64 = 2.785;
/// Picard iterations stop once successive iterates differ by less than this
/// in the max-over-time L¹(Ω) norm.
pub const PICARD_TOL: f64 = 1e-12;
/// Collocation intervals per Picard window.
pub const PICARD_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Exact propagator e^{dt A} of the affine system; needs time-constant data.
    ExactExpm,
    Rk4,
    Euler,
    /// Fixed-point iteration of the integral equation on short windows.
    Picard,
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_expm" | "expm" => Ok(Scheme::ExactExpm),
            "rk4" => Ok(Scheme::Rk4),
            "euler" => Ok(Scheme::Euler),
            "picard" => Ok(Scheme::Picard),
            other => Err(Error::param(
                "scheme",
                format!("unknown scheme {other:?}; expected exact_expm, rk4, euler or picard"),
            )),
        }
    }
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ExactExpm => "exact_expm",
            Scheme::Rk4 => "rk4",
            Scheme::Euler => "euler",
            Scheme::Picard => "picard",
        }
    }
}

/// Values prescribed on the exterior nodes.
pub enum Boundary<'a> {
    Zero,
    /// g(coords), constant in time.
    Static(&'a dyn Fn(&[f64]) -> f64),
    /// g(coords, t).
    Dynamic(&'a dyn Fn(&[f64], f64) -> f64),
}

impl Boundary<'_> {
    fn time_constant(&self) -> bool {
        !matches!(self, Boundary::Dynamic(_))
    }
}

/// States on Ω (in `omega` order) at the stored times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub omega: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub cell_volume: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Σ_Ω u h^{2n+1} at stored time i.
    pub fn mass(&self, i: usize) -> f64 {
        self.states[i].iter().sum::<f64>() * self.cell_volume
    }

    /// ‖u - c‖_{L²(Ω)} at stored time i.
    pub fn l2_dist_to_const(&self, i: usize, c: f64) -> f64 {
        (self.states[i].iter().map(|v| (v - c) * (v - c)).sum::<f64>() * self.cell_volume).sqrt()
    }

    pub fn l2_norm(&self, i: usize) -> f64 {
        self.l2_dist_to_const(i, 0.0)
    }

    pub fn sup_norm(&self, i: usize) -> f64 {
        self.states[i].iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|s| s.iter())
            .fold(f64::INFINITY, |a, v| a.min(*v))
    }

    /// Writes state i into a full-lattice field (exterior entries zero).
    pub fn to_field(&self, lattice: &LatticeDomain, i: usize) -> Field {
        let mut f = Field::zeros(lattice);
        for (k, &p) in self.omega.iter().enumerate() {
            f.values[p] = self.states[i][k];
        }
        f.t = self.times[i];
        f
    }
}

/// Exterior data writer shared by the schemes.
struct Exterior<'a> {
    nodes: Vec<usize>,
    coords: Vec<f64>,
    dim: usize,
    boundary: &'a Boundary<'a>,
}

impl<'a> Exterior<'a> {
    fn new(lattice: &LatticeDomain, boundary: &'a Boundary<'a>, active: bool) -> Self {
        let dim = lattice.dim();
        let nodes = if active && !matches!(boundary, Boundary::Zero) {
            lattice.exterior_nodes()
        } else {
            Vec::new()
        };
        let mut coords = vec![0.0; nodes.len() * dim];
        for (k, &q) in nodes.iter().enumerate() {
            lattice.coords(q, &mut coords[k * dim..(k + 1) * dim]);
        }
        Self {
            nodes,
            coords,
            dim,
            boundary,
        }
    }

    fn fill(&self, full: &mut [f64], t: f64) {
        for (k, &q) in self.nodes.iter().enumerate() {
            let c = &self.coords[k * self.dim..(k + 1) * self.dim];
            full[q] = match self.boundary {
                Boundary::Zero => 0.0,
                Boundary::Static(g) => g(c),
                Boundary::Dynamic(g) => g(c, t),
            };
        }
    }
}

fn scatter(omega: &[usize], u: &[f64], full: &mut [f64]) {
    for (k, &p) in omega.iter().enumerate() {
        full[p] = u[k];
    }
}

/// Integrates u' = A u (exterior from `boundary`) on [0, t_end], storing every step of size
/// dt (the last step is shortened to land on t_end).
pub fn integrate<G: LinearGenerator + ?Sized>(
    gen: &G,
    lattice: &LatticeDomain,
    u0: &Field,
    boundary: &Boundary,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<Trajectory> {
    u0.check(lattice)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", "must be positive"));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::param("T", "must be nonnegative"));
    }
    let rho = gen.spectral_bound();
    match scheme {
        Scheme::Euler if dt * rho > 2.0 => {
            return Err(Error::UnstableStep {
                dt,
                limit: 2.0 / rho,
            })
        }
        Scheme::Rk4 if dt * rho > RK4_REAL_AXIS_LIMIT => {
            return Err(Error::UnstableStep {
                dt,
                limit: RK4_REAL_AXIS_LIMIT / rho,
            })
        }
        Scheme::ExactExpm if !boundary.time_constant() => {
            return Err(Error::param(
                "scheme",
                "exact_expm needs time-constant exterior data",
            ))
        }
        _ => {}
    }
    let steps = ((t_end / dt - 1e-9).ceil().max(0.0)) as usize;
    let mut times: Vec<f64> = (0..=steps).map(|k| (k as f64 * dt).min(t_end)).collect();
    if steps > 0 {
        times[steps] = t_end;
    }
    let omega = gen.omega().to_vec();
    let u_init: Vec<f64> = omega.iter().map(|&p| u0.values[p]).collect();
    let ext = Exterior::new(lattice, boundary, gen.reads_exterior());
    let states = match scheme {
        Scheme::Euler => explicit(gen, lattice, &ext, &u_init, &times, false),
        Scheme::Rk4 => explicit(gen, lattice, &ext, &u_init, &times, true),
        Scheme::ExactExpm => expm(gen, lattice, &ext, &u_init, &times)?,
        Scheme::Picard => picard(gen, lattice, &ext, &u_init, &times)?,
    };
    Ok(Trajectory {
        omega,
        times,
        states,
        cell_volume: lattice.cell_volume(),
    })
}

fn explicit<G: LinearGenerator + ?Sized>(
    gen: &G,
    lattice: &LatticeDomain,
    ext: &Exterior,
    u_init: &[f64],
    times: &[f64],
    rk4: bool,
) -> Vec<Vec<f64>> {
    let omega = gen.omega();
    let m = omega.len();
    let mut full = vec![0.0; lattice.node_count()];
    let static_ext = ext.boundary.time_constant();
    if static_ext {
        ext.fill(&mut full, 0.0);
    }
    let eval = |u: &[f64], t: f64, out: &mut [f64], full: &mut [f64]| {
        scatter(omega, u, full);
        if !static_ext {
            ext.fill(full, t);
        }
        gen.apply(full, out);
    };
    let mut states = vec![u_init.to_vec()];
    let mut u = u_init.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut tmp = vec![0.0; m];
    for w in times.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        if rk4 {
            eval(&u, t, &mut k1, &mut full);
            for i in 0..m {
                tmp[i] = u[i] + 0.5 * h * k1[i];
            }
            eval(&tmp, t + 0.5 * h, &mut k2, &mut full);
            for i in 0..m {
                tmp[i] = u[i] + 0.5 * h * k2[i];
            }
            eval(&tmp, t + 0.5 * h, &mut k3, &mut full);
            for i in 0..m {
                tmp[i] = u[i] + h * k3[i];
            }
            eval(&tmp, t + h, &mut k4, &mut full);
            for i in 0..m {
                u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        } else {
            eval(&u, t, &mut k1, &mut full);
            for i in 0..m {
                u[i] += h * k1[i];
            }
        }
        states.push(u.clone());
    }
    states
}

/// Dense Ω block A and forcing b = A_ext g, by applying the generator to unit vectors.
pub fn dense_generator<G: LinearGenerator + ?Sized>(
    gen: &G,
    lattice: &LatticeDomain,
    boundary: &Boundary,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let omega = gen.omega();
    let m = omega.len();
    if m > EXPM_NODE_LIMIT {
        return Err(Error::TooLarge(format!(
            "dense generator over {m} Ω nodes (limit {EXPM_NODE_LIMIT})"
        )));
    }
    let ext = Exterior::new(lattice, boundary, gen.reads_exterior());
    let mut full = vec![0.0; lattice.node_count()];
    ext.fill(&mut full, 0.0);
    let mut col = vec![0.0; m];
    gen.apply(&full, &mut col);
    let b = DVector::from_column_slice(&col);
    for q in &ext.nodes {
        full[*q] = 0.0;
    }
    let mut a = DMatrix::zeros(m, m);
    for j in 0..m {
        full[omega[j]] = 1.0;
        gen.apply(&full, &mut col);
        full[omega[j]] = 0.0;
        a.set_column(j, &DVector::from_column_slice(&col));
    }
    Ok((a, b))
}

fn expm<G: LinearGenerator + ?Sized>(
    gen: &G,
    lattice: &LatticeDomain,
    ext: &Exterior,
    u_init: &[f64],
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let (a, b) = dense_generator(gen, lattice, ext.boundary)?;
    let m = a.nrows();
    // augmented generator [[A, b], [0, 0]] carries the constant forcing
    let mut aug = DMatrix::zeros(m + 1, m + 1);
    aug.view_mut((0, 0), (m, m)).copy_from(&a);
    aug.view_mut((0, m), (m, 1)).copy_from(&b);
    let mut cache: Option<(f64, DMatrix<f64>)> = None;
    let mut x = DVector::from_iterator(m + 1, u_init.iter().cloned().chain(std::iter::once(1.0)));
    let mut states = vec![u_init.to_vec()];
    for w in times.windows(2) {
        let h = w[1] - w[0];
        let prop = match &cache {
            Some((hc, p)) if (hc - h).abs() <= 1e-12 * h => p,
            _ => {
                cache = Some((h, (&aug * h).exp()));
                &cache.as_ref().unwrap().1
            }
        };
        x = prop * &x;
        x[m] = 1.0;
        states.push(x.rows(0, m).iter().cloned().collect());
    }
    Ok(states)
}

/// Chebyshev–Gauss–Lobatto nodes on [-1, 1] in increasing order, with the spectral
/// integration matrix S[i][j] = ∫_{-1}^{τ_i} ℓ_j.
fn lobatto_integration(m: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let tau: Vec<f64> = (0..=m)
        .map(|j| -(std::f64::consts::PI * j as f64 / m as f64).cos())
        .collect();
    let cheb = |k: usize, x: f64| (k as f64 * x.clamp(-1.0, 1.0).acos()).cos();
    let int_cheb = |k: usize, x: f64| -> f64 {
        let prim = |x: f64| match k {
            0 => x,
            1 => 0.5 * x * x,
            _ => {
                cheb(k + 1, x) / (2.0 * (k + 1) as f64) - cheb(k - 1, x) / (2.0 * (k - 1) as f64)
            }
        };
        prim(x) - prim(-1.0)
    };
    let v = DMatrix::from_fn(m + 1, m + 1, |i, k| cheb(k, tau[i]));
    let w = DMatrix::from_fn(m + 1, m + 1, |i, k| int_cheb(k, tau[i]));
    let vinv = v
        .try_inverse()
        .ok_or_else(|| Error::NoConvergence("Chebyshev collocation matrix is singular".into()))?;
    Ok((tau, w * vinv))
}

fn picard<G: LinearGenerator + ?Sized>(
    gen: &G,
    lattice: &LatticeDomain,
    ext: &Exterior,
    u_init: &[f64],
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let omega = gen.omega();
    let m = omega.len();
    let vol = lattice.cell_volume();
    let t_end = *times.last().unwrap();
    let c = gen.picard_constant();
    // windows with (C+1) t₀ ≤ ½ < 1
    let t0_max = 0.5 / (c + 1.0);
    let windows = ((t_end / t0_max).ceil() as usize).max(1);
    let t0 = t_end / windows as f64;
    let nodes = PICARD_NODES;
    let (tau, s) = lobatto_integration(nodes)?;
    let bary: Vec<f64> = (0..=nodes)
        .map(|j| {
            let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == nodes {
                0.5 * sgn
            } else {
                sgn
            }
        })
        .collect();

    let mut full = vec![0.0; lattice.node_count()];
    let static_ext = ext.boundary.time_constant();
    if static_ext {
        ext.fill(&mut full, 0.0);
    }
    let mut states = vec![u_init.to_vec()];
    let mut next_out = 1;
    let mut start = u_init.to_vec();
    let mut u = vec![vec![0.0; m]; nodes + 1];
    let mut f = vec![vec![0.0; m]; nodes + 1];
    for win in 0..windows {
        let a = win as f64 * t0;
        let b = if win + 1 == windows { t_end } else { a + t0 };
        let half = 0.5 * (b - a);
        let tn: Vec<f64> = tau.iter().map(|x| a + half * (x + 1.0)).collect();
        for row in u.iter_mut() {
            row.copy_from_slice(&start);
        }
        let mut converged = false;
        for _ in 0..500 {
            for j in 0..=nodes {
                scatter(omega, &u[j], &mut full);
                if !static_ext {
                    ext.fill(&mut full, tn[j]);
                }
                gen.apply(&full, &mut f[j]);
            }
            // 𝔗u(t) = u(a) + ∫_a^t (A u + forcing)
            let mut change: f64 = 0.0;
            for i in 0..=nodes {
                let mut l1 = 0.0;
                for k in 0..m {
                    let mut acc = 0.0;
                    for j in 0..=nodes {
                        acc += s[(i, j)] * f[j][k];
                    }
                    let v = start[k] + half * acc;
                    l1 += (v - u[i][k]).abs();
                    u[i][k] = v;
                }
                change = change.max(l1 * vol);
            }
            if change < PICARD_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence(format!(
                "Picard iteration on window [{a}, {b}]"
            )));
        }
        while next_out < times.len() && times[next_out] <= b + 1e-12 * b.max(1.0) {
            let t = times[next_out];
            let x = (2.0 * (t - a) / (b - a) - 1.0).clamp(-1.0, 1.0);
            let mut out = vec![0.0; m];
            if let Some(j) = tau.iter().position(|v| (v - x).abs() < 1e-15) {
                out.copy_from_slice(&u[j]);
            } else {
                let wts: Vec<f64> = (0..=nodes).map(|j| bary[j] / (x - tau[j])).collect();
                let den: f64 = wts.iter().sum();
                for (j, wj) in wts.iter().enumerate() {
                    for k in 0..m {
                        out[k] += wj * u[j][k];
                    }
                }
                out.iter_mut().for_each(|v| *v /= den);
            }
            states.push(out);
            next_out += 1;
        }
        start.copy_from_slice(&u[nodes]);
    }
    Ok(states)
}

/// Most negative value of (super - sub) over all nodes and stored times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub min_difference: f64,
    pub at_time: f64,
    pub at_node: usize,
}

pub fn check_comparison(sup: &Trajectory, sub: &Trajectory) -> Result<ComparisonReport> {
    if sup.omega != sub.omega || sup.times.len() != sub.times.len() {
        return Err(Error::GridMismatch(
            "trajectories differ in Ω nodes or stored times".into(),
        ));
    }
    if sup
        .times
        .iter()
        .zip(&sub.times)
        .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
    {
        return Err(Error::GridMismatch("time grids differ".into()));
    }
    let mut rep = ComparisonReport {
        min_difference: f64::INFINITY,
        at_time: 0.0,
        at_node: sup.omega.first().copied().unwrap_or(0),
    };
    for (i, (a, b)) in sup.states.iter().zip(&sub.states).enumerate() {
        for (k, (x, y)) in a.iter().zip(b).enumerate() {
            let d = x - y;
            if d < rep.min_difference {
                rep = ComparisonReport {
                    min_difference: d,
                    at_time: sup.times[i],
                    at_node: sup.omega[k],
                };
            }
        }
    }
    Ok(rep)
}
