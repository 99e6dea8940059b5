//! Spectral evolution of u_t = J∗u - u and of the heat equation u_t = L u on all of H_n.
//!
//! Large times are handled in the dilated frame w_t(p) = t^{n+1} u(δ_t p, t), whose
//! coefficients on a fixed grid are û(λ/t, k, t). The δ mass e^{-t}u₀ of the nonlocal
//! fundamental solution is added back in closed form, since no truncated spectral grid
//! can carry it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::spherical_transform::{
    forward, inverse, sigma_norm, RadialProfile, SpectralCoefficients, SpectralGrid,
};

/// Ĵ of the example kernel: e^{-|λ|(2k+n)}.
#[inline]
pub fn example_symbol(lambda: f64, k: usize, n: usize) -> f64 {
    (-lambda.abs() * (2 * k + n) as f64).exp()
}

/// Ĵ(λ,k) = e^{-|λ|(2k+n)} on every admissible grid entry.
pub fn example_kernel_spectral(grid: &SpectralGrid) -> SpectralCoefficients {
    let n = grid.n;
    let mut c = SpectralCoefficients::from_fn(grid, |l, k| Complex64::new(example_symbol(l, k, n), 0.0));
    c.real_origin = true;
    c
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralMultiplier {
    /// e^{-|λ|(2k+n)t}.
    Heat,
    /// e^{(Ĵ-1)t} with the example kernel in closed form; usable at any λ.
    ExampleKernel,
    /// e^{(Ĵ-1)t} with Ĵ tabulated on a grid; usable only on that grid.
    Nonlocal(SpectralCoefficients),
}

impl SpectralMultiplier {
    pub fn is_nonlocal(&self) -> bool {
        !matches!(self, SpectralMultiplier::Heat)
    }

    /// m(λ,k,t) from a closed-form symbol.
    pub fn closed_form(&self, lambda: f64, k: usize, n: usize, t: f64) -> Result<Complex64> {
        match self {
            SpectralMultiplier::Heat => Ok(Complex64::new(
                (-lambda.abs() * (2 * k + n) as f64 * t).exp(),
                0.0,
            )),
            SpectralMultiplier::ExampleKernel => Ok(Complex64::new(
                ((example_symbol(lambda, k, n) - 1.0) * t).exp(),
                0.0,
            )),
            SpectralMultiplier::Nonlocal(_) => Err(Error::param(
                "multiplier",
                "a tabulated Ĵ cannot be evaluated off its grid",
            )),
        }
    }

    /// Smooth part of the multiplier after removing the atom e^{-t}: e^{-t}(e^{Ĵt} - 1).
    /// The heat multiplier has no atom and is returned unchanged.
    fn smooth_closed_form(&self, lambda: f64, k: usize, n: usize, t: f64) -> Result<Complex64> {
        match self {
            SpectralMultiplier::ExampleKernel => {
                Ok(smooth_factor(Complex64::new(example_symbol(lambda, k, n), 0.0), t))
            }
            _ => self.closed_form(lambda, k, n, t),
        }
    }
}

/// û(t) = m(t) û₀, entrywise.
pub fn evolve_spectral(
    u0: &SpectralCoefficients,
    m: &SpectralMultiplier,
    t: f64,
) -> Result<SpectralCoefficients> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", "must be finite and nonnegative"));
    }
    let grid = &u0.grid;
    if let SpectralMultiplier::Nonlocal(j) = m {
        if j.grid != *grid {
            return Err(Error::GridMismatch(
                "Ĵ and û₀ live on different spectral grids".into(),
            ));
        }
    }
    let mut out = u0.clone();
    for row in 0..grid.rows() {
        let l = grid.signed_lambda(row);
        for k in 0..grid.k_count[grid.node_of_row(row)] {
            let f = match m {
                SpectralMultiplier::Nonlocal(j) => ((j.values[[row, k]] - 1.0) * t).exp(),
                _ => m.closed_form(l, k, grid.n, t)?,
            };
            out.values[[row, k]] *= f;
        }
    }
    Ok(out)
}

/// e^{-t}(e^{Ĵt} - 1) without overflow at large t or cancellation at small Ĵt.
fn smooth_factor(j: Complex64, t: f64) -> Complex64 {
    if j.im == 0.0 && (j.re * t).abs() < 1.0 {
        Complex64::new((-t).exp() * (j.re * t).exp_m1(), 0.0)
    } else {
        ((j - 1.0) * t).exp() - (-t).exp()
    }
}

/// Fundamental solution e^{(Ĵ-1)t} = e^{-t} + e^{-t}(e^{Ĵt} - 1): atom mass and smooth part.
pub fn fundamental_solution_split(
    j: &SpectralCoefficients,
    t: f64,
) -> Result<(f64, SpectralCoefficients)> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param("t", "must be positive"));
    }
    let atom = (-t).exp();
    let mut smooth = j.clone();
    let grid = &j.grid;
    for row in 0..grid.rows() {
        for k in 0..grid.k_count[grid.node_of_row(row)] {
            smooth.values[[row, k]] = smooth_factor(j.values[[row, k]], t);
        }
    }
    Ok((atom, smooth))
}

/// Cauchy datum: closed form for the atom term plus its samples for the forward transform.
pub struct InitialDatum<'a> {
    pub n: usize,
    pub func: &'a dyn Fn(f64, f64) -> f64,
    pub profile: RadialProfile,
}

impl<'a> InitialDatum<'a> {
    pub fn new(
        n: usize,
        func: &'a dyn Fn(f64, f64) -> f64,
        r_max: f64,
        s_max: f64,
        nr: usize,
        ns: usize,
    ) -> Self {
        Self {
            n,
            func,
            profile: RadialProfile::sample(n, r_max, s_max, nr, ns, func),
        }
    }
}

/// Base grid and output nodes of the dilated frame.
#[derive(Debug, Clone)]
pub struct DilatedFrame {
    pub grid: SpectralGrid,
    pub skeleton: RadialProfile,
}

impl DilatedFrame {
    /// Default frame: the library grid and r ∈ [0, 8], s ∈ [-12, 12].
    pub fn default_for(n: usize) -> Self {
        Self {
            grid: SpectralGrid::default_for(n),
            skeleton: RadialProfile::skeleton(n, 8.0, 12.0, 129, 193),
        }
    }
}

/// w_t = t^{n+1} u(δ_t ·, t) on the frame skeleton.
pub fn scaled_solution(
    u0: &InitialDatum,
    m: &SpectralMultiplier,
    t: f64,
    frame: &DilatedFrame,
) -> Result<RadialProfile> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param("t", "must be positive"));
    }
    let n = frame.grid.n;
    if u0.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: u0.n,
        });
    }
    let small = frame.grid.dilated(t);
    let mut c = forward(&u0.profile, &small)?;
    for row in 0..small.rows() {
        let l = small.signed_lambda(row);
        for k in 0..small.k_count[small.node_of_row(row)] {
            c.values[[row, k]] *= m.smooth_closed_form(l, k, n, t)?;
        }
    }
    let c = c.relabel(&frame.grid)?;
    let mut w = inverse(&c, &frame.skeleton)?;
    if m.is_nonlocal() {
        let a = t.powi(n as i32 + 1) * (-t).exp();
        let st = t.sqrt();
        for (i, r) in frame.skeleton.r.iter().enumerate() {
            for (j, s) in frame.skeleton.s.iter().enumerate() {
                w.values[[i, j]] += a * (u0.func)(st * r, t * s);
            }
        }
    }
    Ok(w)
}

/// Solution u(·,t) in the original coordinates, on `skeleton`.
pub fn solution_at(
    u0: &InitialDatum,
    m: &SpectralMultiplier,
    t: f64,
    grid: &SpectralGrid,
    skeleton: &RadialProfile,
) -> Result<RadialProfile> {
    if t == 0.0 {
        return Ok(skeleton.resampled(u0.func));
    }
    let c = evolve_atomless(&forward(&u0.profile, grid)?, m, t)?;
    let mut u = inverse(&c, skeleton)?;
    if m.is_nonlocal() {
        let a = (-t).exp();
        for (i, r) in skeleton.r.iter().enumerate() {
            for (j, s) in skeleton.s.iter().enumerate() {
                u.values[[i, j]] += a * (u0.func)(*r, *s);
            }
        }
    }
    Ok(u)
}

fn evolve_atomless(
    u0: &SpectralCoefficients,
    m: &SpectralMultiplier,
    t: f64,
) -> Result<SpectralCoefficients> {
    let grid = &u0.grid;
    let mut out = u0.clone();
    for row in 0..grid.rows() {
        let l = grid.signed_lambda(row);
        for k in 0..grid.k_count[grid.node_of_row(row)] {
            out.values[[row, k]] *= m.smooth_closed_form(l, k, grid.n, t)?;
        }
    }
    Ok(out)
}

/// One row of a decay table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub t: f64,
    pub norm: f64,
    /// norm · t^{rate}, with the rate of the theorem being tested.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    /// Fitted log-log slope of `norm` against t; NaN with fewer than two positive rows.
    pub slope: f64,
    pub p: f64,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(*t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("times", "must be positive and increasing"));
    }
    Ok(())
}

fn table(rows: Vec<DecayRow>, p: f64) -> DecayTable {
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.t, r.norm)).unzip();
    let slope = loglog_slope(&x, &y).unwrap_or(f64::NAN);
    DecayTable { rows, slope, p }
}

/// (t, ‖u(t)‖_∞, t^{n+1}‖u(t)‖_∞) with the sup taken over the frame skeleton.
pub fn sup_norm_decay(
    u0: &InitialDatum,
    m: &SpectralMultiplier,
    times: &[f64],
    frame: &DilatedFrame,
) -> Result<DecayTable> {
    check_times(times)?;
    let n = frame.grid.n as i32;
    let mut rows = Vec::new();
    for &t in times {
        let w = scaled_solution(u0, m, t, frame)?;
        let scaled = w.sup_norm();
        rows.push(DecayRow {
            t,
            norm: scaled / t.powi(n + 1),
            scaled,
        });
    }
    Ok(table(rows, f64::INFINITY))
}

/// (t, ‖u(t)‖_p, t^{(n+1)(1-1/p)}‖u(t)‖_p); the exact dilation law turns ‖w_t‖_p into ‖u‖_p.
pub fn lp_decay(
    u0: &InitialDatum,
    m: &SpectralMultiplier,
    p: f64,
    times: &[f64],
    frame: &DilatedFrame,
) -> Result<DecayTable> {
    if !(p > 2.0) {
        return Err(Error::param("p", "must exceed 2"));
    }
    check_times(times)?;
    let n = frame.grid.n as f64;
    let mut rows = Vec::new();
    for &t in times {
        let w = scaled_solution(u0, m, t, frame)?;
        let scaled = w.lp_norm(p);
        rows.push(DecayRow {
            t,
            norm: scaled * t.powf(-(n + 1.0) * (1.0 - 1.0 / p)),
            scaled,
        });
    }
    Ok(table(rows, p))
}

/// t^{n+1} sup|u(t) - v(t)| for two multipliers, from the frame profiles.
pub fn scaled_difference(
    u0: &InitialDatum,
    a: &SpectralMultiplier,
    b: &SpectralMultiplier,
    times: &[f64],
    frame: &DilatedFrame,
) -> Result<Vec<f64>> {
    check_times(times)?;
    times
        .iter()
        .map(|&t| {
            let wa = scaled_solution(u0, a, t, frame)?;
            let wb = scaled_solution(u0, b, t, frame)?;
            Ok(wa.max_abs_diff(&wb))
        })
        .collect()
}

/// Ĝ(λ,k) = e^{-|λ|(2k+n)} û₀(0,k) together with the extrapolation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticProfile {
    pub coefficients: SpectralCoefficients,
    /// Extrapolated û₀(0,k).
    pub at_zero: Vec<Complex64>,
    /// Largest relative disagreement between the two smallest nodes and the extrapolant.
    pub max_disagreement: f64,
    pub warnings: Vec<String>,
}

/// Extrapolation tolerance above which a warning is recorded.
pub const EXTRAPOLATION_WARN: f64 = 0.05;

pub fn asymptotic_profile(u0: &SpectralCoefficients) -> Result<AsymptoticProfile> {
    let grid = &u0.grid;
    if grid.len() < 2 {
        return Err(Error::param("grid", "extrapolation needs two λ nodes"));
    }
    let n = grid.n;
    let (l1, l2) = (grid.lambda[0], grid.lambda[1]);
    let kc = grid.k_count[0].min(grid.k_count[1]);
    // even part in λ, then f(λ) ≈ a + bλ²
    let even = |i: usize, k: usize| {
        0.5 * (u0.values[[grid.row(true, i), k]] + u0.values[[grid.row(false, i), k]])
    };
    let mut at_zero = vec![Complex64::new(0.0, 0.0); grid.k_max + 1];
    let mut worst: f64 = 0.0;
    let mut warnings = Vec::new();
    for (k, slot) in at_zero.iter_mut().enumerate().take(kc) {
        let (f1, f2) = (even(0, k), even(1, k));
        let a = (f1 * (l2 * l2) - f2 * (l1 * l1)) / (l2 * l2 - l1 * l1);
        *slot = a;
        let scale = a.norm();
        if scale > 0.0 {
            let d = (f1 - a).norm().max((f2 - a).norm()) / scale;
            worst = worst.max(d);
        }
    }
    if worst > EXTRAPOLATION_WARN {
        warnings.push(format!(
            "extrapolation to λ = 0 disagrees by {:.1}% between the two smallest nodes",
            100.0 * worst
        ));
    }
    let coefficients = SpectralCoefficients::from_fn(grid, |l, k| {
        if k < kc {
            at_zero[k] * (-l.abs() * (2 * k + n) as f64).exp()
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(AsymptoticProfile {
        coefficients,
        at_zero,
        max_disagreement: worst,
        warnings,
    })
}

/// max|t^{n+1} δ_t u(·,t) - G_{u₀}| over the frame skeleton at each time.
pub fn profile_distance(
    u0: &InitialDatum,
    m: &SpectralMultiplier,
    times: &[f64],
    frame: &DilatedFrame,
) -> Result<(Vec<f64>, AsymptoticProfile)> {
    check_times(times)?;
    let c0 = forward(&u0.profile, &frame.grid)?;
    let prof = asymptotic_profile(&c0)?;
    let g = inverse(&prof.coefficients, &frame.skeleton)?;
    let d = times
        .iter()
        .map(|&t| Ok(scaled_solution(u0, m, t, frame)?.max_abs_diff(&g)))
        .collect::<Result<Vec<f64>>>()?;
    Ok((d, prof))
}

/// Σ-norm of the smooth part of the fundamental solution at each time.
pub fn smooth_part_norms(j: &SpectralCoefficients, times: &[f64]) -> Result<Vec<f64>> {
    check_times(times)?;
    times
        .iter()
        .map(|&t| Ok(sigma_norm(&fundamental_solution_split(j, t)?.1)))
        .collect()
}
