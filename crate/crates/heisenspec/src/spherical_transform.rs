//! Spherical transform of U(n)-invariant functions on H_n and its Plancherel inverse.
//!
//! Forward: f̂(λ,k) = ω_{2n-1} ∫∫ f(r,s) e^{-iλs} ψ_k(|λ|r²/2) r^{2n-1} dr ds with
//! ψ_k(x) = L_k^{n-1}(x)/binom(k+n-1,k) · e^{-x/2}.
//! Inverse: f(r,s) = (2π)^{-n-1} Σ_k binom(k+n-1,k) ∫ f̂(λ,k) ψ_k(|λ|r²/2) e^{iλs} |λ|^n dλ.

use crate::error::{Error, Result};
use crate::group_core::{GroupKernel, LatticeDomain};
use crate::special_functions::laguerre_functions;
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;

/// U(n)-invariant function sampled on r ∈ [0, r_max] × s ∈ [-s_max, s_max].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub n: usize,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    /// Shape (N_r, N_s).
    pub values: Array2<f64>,
    /// Edge samples above `tail_tol · max|f|` trigger a warning in `forward`.
    pub tail_tol: f64,
}

impl RadialProfile {
    pub fn skeleton(n: usize, r_max: f64, s_max: f64, nr: usize, ns: usize) -> Self {
        let r = (0..nr)
            .map(|i| r_max * i as f64 / (nr - 1).max(1) as f64)
            .collect();
        let s = (0..ns)
            .map(|j| -s_max + 2.0 * s_max * j as f64 / (ns - 1).max(1) as f64)
            .collect();
        Self {
            n,
            r,
            s,
            values: Array2::zeros((nr, ns)),
            tail_tol: 1e-8,
        }
    }

    pub fn sample<F: Fn(f64, f64) -> f64>(
        n: usize,
        r_max: f64,
        s_max: f64,
        nr: usize,
        ns: usize,
        f: F,
    ) -> Self {
        Self::skeleton(n, r_max, s_max, nr, ns).resampled(f)
    }

    /// Same nodes, values from `f(r, s)`.
    pub fn resampled<F: Fn(f64, f64) -> f64>(&self, f: F) -> Self {
        let mut out = self.clone();
        for (i, r) in self.r.iter().enumerate() {
            for (j, s) in self.s.iter().enumerate() {
                out.values[[i, j]] = f(*r, *s);
            }
        }
        out
    }

    pub fn with_values(&self, values: Array2<f64>) -> Self {
        Self {
            values,
            ..self.clone()
        }
    }

    pub fn hr(&self) -> f64 {
        self.r[1] - self.r[0]
    }
    pub fn hs(&self) -> f64 {
        self.s[1] - self.s[0]
    }
    pub fn same_nodes(&self, other: &Self) -> bool {
        self.n == other.n && self.r == other.r && self.s == other.s
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest edge sample (r = r_max or s = ±s_max) relative to the sup norm.
    pub fn tail_ratio(&self) -> f64 {
        let sup = self.sup_norm();
        if sup == 0.0 {
            return 0.0;
        }
        let (nr, ns) = self.values.dim();
        let mut m: f64 = 0.0;
        for j in 0..ns {
            m = m.max(self.values[[nr - 1, j]].abs());
        }
        for i in 0..nr {
            m = m.max(self.values[[i, 0]].abs()).max(self.values[[i, ns - 1]].abs());
        }
        m / sup
    }

    /// L^p(H_n) norm with volume element ω_{2n-1} r^{2n-1} dr ds, trapezoid in both variables.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let wr = trapezoid_weights(self.r.len(), self.hr());
        let ws = trapezoid_weights(self.s.len(), self.hs());
        let om = sphere_area(self.n);
        let mut acc = 0.0;
        for (i, r) in self.r.iter().enumerate() {
            let rw = r.powi(2 * self.n as i32 - 1) * wr[i];
            for (j, w) in ws.iter().enumerate() {
                acc += self.values[[i, j]].abs().powf(p) * rw * w;
            }
        }
        (om * acc).powf(1.0 / p)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Area of the unit sphere in R^{2n}: 2π^n/(n-1)!.
pub fn sphere_area(n: usize) -> f64 {
    let mut fact = 1.0;
    for j in 1..n {
        fact *= j as f64;
    }
    2.0 * PI.powi(n as i32) / fact
}

pub(crate) fn trapezoid_weights(len: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; len];
    if len > 0 {
        w[0] = 0.5 * h;
        w[len - 1] = 0.5 * h;
    }
    w
}

/// binom(k+n-1, k): multiplicity of the k-th Laguerre level.
pub fn level_multiplicity(k: usize, n: usize) -> f64 {
    let mut b = 1.0;
    for j in 1..n {
        b *= (k + j) as f64 / j as f64;
    }
    b
}

fn bernoulli_even(m: usize) -> f64 {
    match m {
        1 => 1.0 / 6.0,
        2 => -1.0 / 30.0,
        3 => 1.0 / 42.0,
        4 => -1.0 / 30.0,
        5 => 5.0 / 66.0,
        _ => 0.0,
    }
}

/// Quadrature on the positive λ axis for ∫ g(λ) |λ|^n dλ, with a Laguerre cutoff.
///
/// Each node carries `k_count[i]` admissible levels: k ≤ k_max and |λ|(2k+n) ≤ xi_cut.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    pub n: usize,
    /// Positive nodes, ascending.
    pub lambda: Vec<f64>,
    /// Weights including the |λ|^n factor.
    pub weight: Vec<f64>,
    pub k_max: usize,
    pub k_count: Vec<usize>,
    pub xi_cut: f64,
    /// Extrapolate the level sum in 1/K from the K_max and K_max/2 truncations.
    pub richardson: bool,
}

/// Parameters of the graded λ grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradedGridParams {
    pub lambda_min: f64,
    pub lambda_knee: f64,
    pub lambda_max: f64,
    pub n_lambda: usize,
    pub k_max: usize,
    pub xi_cut: f64,
    pub richardson: bool,
}

impl Default for GradedGridParams {
    fn default() -> Self {
        Self {
            lambda_min: 1e-6,
            lambda_knee: 1.0,
            lambda_max: 40.0,
            n_lambda: 400,
            k_max: 1000,
            xi_cut: 300.0,
            richardson: true,
        }
    }
}

impl SpectralGrid {
    /// λ = knee · ln(1 + e^u) with u uniform: geometric near 0, uniform for λ ≫ knee.
    pub fn graded(n: usize, p: GradedGridParams) -> Result<Self> {
        if !(p.lambda_min > 0.0 && p.lambda_min < p.lambda_max) {
            return Err(Error::param("lambda_min", "need 0 < lambda_min < lambda_max"));
        }
        if !(p.lambda_knee > 0.0) || p.n_lambda < 2 || !(p.xi_cut > 0.0) {
            return Err(Error::param(
                "grid",
                "need lambda_knee > 0, n_lambda >= 2 and xi_cut > 0",
            ));
        }
        let inv = |l: f64| (l / p.lambda_knee).exp_m1().ln();
        let (u0, u1) = (inv(p.lambda_min), inv(p.lambda_max));
        let du = (u1 - u0) / (p.n_lambda - 1) as f64;
        let mut lambda = Vec::with_capacity(p.n_lambda);
        let mut weight = Vec::with_capacity(p.n_lambda);
        for i in 0..p.n_lambda {
            let u = u0 + du * i as f64;
            // softplus, stable for large u
            let l = p.lambda_knee * (u.max(0.0) + (-u.abs()).exp().ln_1p());
            let dl = p.lambda_knee / (1.0 + (-u).exp());
            let end = if i == 0 || i + 1 == p.n_lambda { 0.5 } else { 1.0 };
            lambda.push(l);
            weight.push(end * du * dl * l.powi(n as i32));
        }
        Ok(Self::with_nodes(n, lambda, weight, p.k_max, p.xi_cut, p.richardson))
    }

    /// Uniform nodes λ_i = i·λ_max/N, i = 1..N (trapezoid on [0, λ_max], no node at 0).
    pub fn uniform(n: usize, lambda_max: f64, n_lambda: usize, k_max: usize) -> Result<Self> {
        if !(lambda_max > 0.0) || n_lambda < 1 {
            return Err(Error::param("lambda_max", "need lambda_max > 0 and n_lambda >= 1"));
        }
        let d = lambda_max / n_lambda as f64;
        let lambda: Vec<f64> = (1..=n_lambda).map(|i| d * i as f64).collect();
        let weight = lambda
            .iter()
            .enumerate()
            .map(|(i, l)| if i + 1 == n_lambda { 0.5 } else { 1.0 } * d * l.powi(n as i32))
            .collect();
        Ok(Self::with_nodes(n, lambda, weight, k_max, f64::INFINITY, false))
    }

    /// Default grid of the library (see README): graded, K_max = 1000, ξ_cut = 300.
    pub fn default_for(n: usize) -> Self {
        Self::graded(n, GradedGridParams::default()).expect("default parameters are valid")
    }

    pub fn with_nodes(
        n: usize,
        lambda: Vec<f64>,
        weight: Vec<f64>,
        k_max: usize,
        xi_cut: f64,
        richardson: bool,
    ) -> Self {
        let k_count = lambda
            .iter()
            .map(|l| {
                let kk = ((xi_cut / l - n as f64) / 2.0).floor();
                if kk < 0.0 {
                    0
                } else {
                    (kk.min(k_max as f64) as usize) + 1
                }
            })
            .collect();
        Self {
            n,
            lambda,
            weight,
            k_max,
            k_count,
            xi_cut,
            richardson,
        }
    }

    /// Grid for the dilated frame: nodes λ/t, weights w/t^{n+1}, same level counts.
    pub fn dilated(&self, t: f64) -> Self {
        Self {
            lambda: self.lambda.iter().map(|l| l / t).collect(),
            weight: self
                .weight
                .iter()
                .map(|w| w / t.powi(self.n as i32 + 1))
                .collect(),
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }
    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
    /// Number of signed nodes (rows of a coefficient table).
    pub fn rows(&self) -> usize {
        2 * self.lambda.len()
    }
    /// Signed λ of a table row; rows are sorted ascending.
    pub fn signed_lambda(&self, row: usize) -> f64 {
        let m = self.len();
        if row < m {
            -self.lambda[m - 1 - row]
        } else {
            self.lambda[row - m]
        }
    }
    /// Positive-node index of a table row.
    pub fn node_of_row(&self, row: usize) -> usize {
        let m = self.len();
        if row < m {
            m - 1 - row
        } else {
            row - m
        }
    }
    /// Row of (sign, node): `positive = true` for +λ_i.
    pub fn row(&self, positive: bool, i: usize) -> usize {
        let m = self.len();
        if positive {
            m + i
        } else {
            m - 1 - i
        }
    }
}

/// f̂ on the signed λ nodes of a grid for k = 0..=k_max; entries past `k_count` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    pub grid: SpectralGrid,
    /// Shape (2·N_λ, k_max + 1).
    pub values: Array2<Complex64>,
    /// Set when the data came from a real profile, so ĝ(-λ,k) = conj ĝ(λ,k).
    pub real_origin: bool,
    pub warnings: Vec<String>,
}

impl SpectralCoefficients {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            values: Array2::zeros((grid.rows(), grid.k_max + 1)),
            grid: grid.clone(),
            real_origin: true,
            warnings: Vec::new(),
        }
    }

    /// Fills admissible entries from g(signed λ, k).
    pub fn from_fn<F: Fn(f64, usize) -> Complex64>(grid: &SpectralGrid, g: F) -> Self {
        let mut c = Self::zeros(grid);
        for row in 0..grid.rows() {
            let l = grid.signed_lambda(row);
            let kc = grid.k_count[grid.node_of_row(row)];
            for k in 0..kc {
                c.values[[row, k]] = g(l, k);
            }
        }
        c.real_origin = false;
        c
    }

    /// Same values read against another grid with identical shape (dilated-frame relabel).
    pub fn relabel(&self, grid: &SpectralGrid) -> Result<Self> {
        if grid.rows() != self.grid.rows() || grid.k_max != self.grid.k_max || grid.n != self.grid.n
        {
            return Err(Error::GridMismatch("relabel needs identical shape".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            ..self.clone()
        })
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut c = self.clone();
        c.values.mapv_inplace(|v| v * a);
        c
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest |ĝ(-λ,k) - conj ĝ(λ,k)|.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.grid.len() {
            let (rp, rm) = (self.grid.row(true, i), self.grid.row(false, i));
            for k in 0..=self.grid.k_max {
                m = m.max((self.values[[rm, k]] - self.values[[rp, k]].conj()).norm());
            }
        }
        m
    }
}

/// Spherical transform on the grid. Trapezoid in s; trapezoid in r with the
/// Euler-Maclaurin endpoint term B_{2n} h^{2n}/(2n) · G(0) at r = 0.
pub fn forward(f: &RadialProfile, grid: &SpectralGrid) -> Result<SpectralCoefficients> {
    if f.n != grid.n {
        return Err(Error::DimensionMismatch {
            expected: grid.n,
            got: f.n,
        });
    }
    let n = f.n;
    let (nr, ns) = f.values.dim();
    if nr < 2 || ns < 2 {
        return Err(Error::param("profile", "needs at least two nodes per axis"));
    }
    let hr = f.hr();
    let ws = trapezoid_weights(ns, f.hs());
    let wr = trapezoid_weights(nr, hr);
    let rw: Vec<f64> = (0..nr)
        .map(|m| f.r[m].powi(2 * n as i32 - 1) * wr[m])
        .collect();
    let endpoint = bernoulli_even(n) * hr.powi(2 * n as i32) / (2 * n) as f64;
    let omega = sphere_area(n);

    let mut out = SpectralCoefficients::zeros(grid);
    out.real_origin = true;
    let tail = f.tail_ratio();
    if tail > f.tail_tol {
        out.warnings.push(format!(
            "tail: edge samples reach {tail:.3e} of the sup norm (tolerance {:.1e})",
            f.tail_tol
        ));
    }

    let mut fc = vec![0.0; nr];
    let mut fs = vec![0.0; nr];
    let mut cs = vec![0.0; ns];
    let mut sn = vec![0.0; ns];
    let mut psi = vec![0.0; grid.k_max + 1];
    let mut acc_p = vec![Complex64::new(0.0, 0.0); grid.k_max + 1];
    let mut acc_m = vec![Complex64::new(0.0, 0.0); grid.k_max + 1];
    for i in 0..grid.len() {
        let kc = grid.k_count[i];
        if kc == 0 {
            continue;
        }
        let l = grid.lambda[i];
        for j in 0..ns {
            let (sv, cv) = (l * f.s[j]).sin_cos();
            cs[j] = cv * ws[j];
            sn[j] = sv * ws[j];
        }
        for m in 0..nr {
            let row = f.values.row(m);
            let (mut a, mut b) = (0.0, 0.0);
            for j in 0..ns {
                a += row[j] * cs[j];
                b += row[j] * sn[j];
            }
            fc[m] = a;
            fs[m] = b;
        }
        acc_p[..kc].fill(Complex64::new(0.0, 0.0));
        acc_m[..kc].fill(Complex64::new(0.0, 0.0));
        for m in 0..nr {
            let wgt = if m == 0 { rw[0] + endpoint } else { rw[m] };
            if wgt == 0.0 {
                continue;
            }
            laguerre_functions(n - 1, 0.5 * l * f.r[m] * f.r[m], &mut psi[..kc]);
            // e^{-iλs} for +λ, e^{+iλs} for -λ
            let fp = Complex64::new(fc[m], -fs[m]) * wgt;
            let fm = Complex64::new(fc[m], fs[m]) * wgt;
            for k in 0..kc {
                acc_p[k] += fp * psi[k];
                acc_m[k] += fm * psi[k];
            }
        }
        let (rp, rm) = (grid.row(true, i), grid.row(false, i));
        for k in 0..kc {
            out.values[[rp, k]] = acc_p[k] * omega;
            out.values[[rm, k]] = acc_m[k] * omega;
        }
    }
    Ok(out)
}

/// Plancherel inversion at the nodes of `skeleton`; returns the real part.
pub fn inverse(c: &SpectralCoefficients, skeleton: &RadialProfile) -> Result<RadialProfile> {
    let grid = &c.grid;
    if skeleton.n != grid.n {
        return Err(Error::DimensionMismatch {
            expected: grid.n,
            got: skeleton.n,
        });
    }
    let n = grid.n;
    let nr = skeleton.r.len();
    let ns = skeleton.s.len();
    let pref = (2.0 * PI).powi(-(n as i32) - 1);
    let half = grid.k_max / 2;
    let mult: Vec<f64> = (0..=grid.k_max).map(|k| level_multiplicity(k, n)).collect();
    let mut out = Array2::<f64>::zeros((nr, ns));
    let mut psi = vec![0.0; grid.k_max + 1];
    let mut gp = vec![Complex64::new(0.0, 0.0); nr];
    let mut gm = vec![Complex64::new(0.0, 0.0); nr];
    let mut e = vec![Complex64::new(0.0, 0.0); ns];
    for i in 0..grid.len() {
        let kc = grid.k_count[i];
        if kc == 0 {
            continue;
        }
        let l = grid.lambda[i];
        let (rp, rm) = (grid.row(true, i), grid.row(false, i));
        let cp = c.values.row(rp);
        let cm = c.values.row(rm);
        for m in 0..nr {
            laguerre_functions(n - 1, 0.5 * l * skeleton.r[m] * skeleton.r[m], &mut psi[..kc]);
            let (mut fp, mut fm) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            let (mut hp, mut hm) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for k in 0..kc {
                let w = psi[k] * mult[k];
                fp += cp[k] * w;
                fm += cm[k] * w;
                if k == half {
                    hp = fp;
                    hm = fm;
                }
            }
            if grid.richardson && kc > half + 1 {
                fp = fp * 2.0 - hp;
                fm = fm * 2.0 - hm;
            }
            gp[m] = fp;
            gm[m] = fm;
        }
        let w = grid.weight[i] * pref;
        for j in 0..ns {
            e[j] = Complex64::from_polar(w, l * skeleton.s[j]);
        }
        for m in 0..nr {
            let mut row = out.row_mut(m);
            let (a, b) = (gp[m], gm[m]);
            for j in 0..ns {
                // G+ e^{iλs} + G- e^{-iλs}
                row[j] += (a * e[j]).re + (b * e[j].conj()).re;
            }
        }
    }
    Ok(skeleton.with_values(out))
}

/// ‖g‖_{L¹(Σ)} = Σ_k ∫ |g(λ,k)| |λ|^n dλ over both signs of λ.
pub fn sigma_norm(c: &SpectralCoefficients) -> f64 {
    let g = &c.grid;
    let mut acc = 0.0;
    for row in 0..g.rows() {
        let i = g.node_of_row(row);
        let w = g.weight[i];
        let r = c.values.row(row);
        for k in 0..g.k_count[i] {
            acc += r[k].norm() * w;
        }
    }
    acc
}

/// Compares forward(J∗f) with forward(J)·forward(f), J∗f from `group_convolve` on a lattice
/// whose nodes contain the (r, 0, s) half-plane of `skeleton`. Returns the largest discrepancy.
pub fn convolution_multiplier_check<F, K>(
    f: F,
    kernel: &K,
    skeleton: &RadialProfile,
    grid: &SpectralGrid,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
    K: GroupKernel,
{
    let n = skeleton.n;
    if kernel.n() != n || grid.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: kernel.n(),
        });
    }
    let (hr, hs) = (skeleton.hr(), skeleton.hs());
    let (nr, ns) = (skeleton.r.len(), skeleton.s.len());
    let r_max = skeleton.r[nr - 1];
    let s_max = skeleton.s[ns - 1];
    let cz = (kernel.support_z() / hr).ceil() as usize + 1;
    let reach = kernel.support_s() + 0.5 * (r_max + kernel.support_z()) * kernel.support_z();
    let cs = (reach / hs).ceil() as usize + 1;
    let d = 2 * n + 1;
    let mut counts = vec![2 * cz + 1; d];
    let mut lower = vec![-(cz as f64) * hr; d];
    let mut h = vec![hr; d];
    counts[0] = nr + 2 * cz;
    counts[2 * n] = ns + 2 * cs;
    lower[2 * n] = -s_max - cs as f64 * hs;
    h[2 * n] = hs;
    let total: usize = counts.iter().product();
    let mut mask = vec![false; total];
    let mut mi = vec![0usize; d];
    let mut lattice = LatticeDomain::new(n, h.clone(), lower.clone(), counts.clone(), {
        let mut m = vec![false; total];
        m[0] = true;
        m
    })?;
    for (idx, slot) in mask.iter_mut().enumerate() {
        lattice.multi_index(idx, &mut mi);
        let on_axis = (1..2 * n).all(|a| mi[a] == cz);
        *slot = on_axis
            && mi[0] >= cz
            && mi[0] < cz + nr
            && mi[2 * n] >= cs
            && mi[2 * n] < cs + ns;
    }
    lattice = lattice.with_mask(mask)?;
    let field = crate::group_core::Field::sample(&lattice, |c| {
        let r = c[..2 * n].iter().map(|v| v * v).sum::<f64>().sqrt();
        f(r, c[2 * n])
    });
    let conv = crate::group_core::group_convolve(&field, kernel, &lattice)?;
    let mut jf = skeleton.clone();
    for i in 0..nr {
        for j in 0..ns {
            mi.fill(cz);
            mi[0] = cz + i;
            mi[2 * n] = cs + j;
            jf.values[[i, j]] = conv.values[lattice.index(&mi)];
        }
    }
    let fprof = skeleton.resampled(&f);
    let jprof = skeleton.resampled(|r, s| {
        let mut w = vec![0.0; 2 * n];
        w[0] = r;
        kernel.value(&w, s)
    });
    let a = forward(&jf, grid)?;
    let b = forward(&jprof, grid)?;
    let c = forward(&fprof, grid)?;
    let mut worst: f64 = 0.0;
    for row in 0..grid.rows() {
        for k in 0..grid.k_count[grid.node_of_row(row)] {
            let d = a.values[[row, k]] - b.values[[row, k]] * c.values[[row, k]];
            worst = worst.max(d.norm());
        }
    }
    Ok(worst)
}

/// A radial test function f(r, s).
pub type ProfileFn = fn(f64, f64) -> f64;

/// Smooth, rapidly decaying profiles used by the roundtrip studies.
pub const TEST_PROFILES: [(&str, ProfileFn); 5] = [
    ("gauss", |r, s| (-r * r - s * s).exp()),
    ("wide", |r, s| (-r * r / 4.0 - 4.0 * s * s).exp()),
    ("poly", |r, s| (1.0 + r * r) * (-r * r - s * s / 2.0).exp()),
    ("cos", |r, s| s.cos() * (-r * r / 2.0 - s * s / 2.0).exp()),
    ("narrow", |r, s| (-2.0 * r * r - s * s / 4.0).exp()),
];

/// ‖inverse(forward(f)) - f‖_∞ / ‖f‖_∞ on an r_max × s_max profile with nr × ns nodes.
pub fn roundtrip_error<F: Fn(f64, f64) -> f64>(
    f: F,
    n: usize,
    r_max: f64,
    s_max: f64,
    nr: usize,
    ns: usize,
    grid: &SpectralGrid,
) -> Result<f64> {
    let p = RadialProfile::sample(n, r_max, s_max, nr, ns, f);
    let c = forward(&p, grid)?;
    let back = inverse(&c, &p)?;
    Ok(back.max_abs_diff(&p) / p.sup_norm())
}
