//! Heisenberg group arithmetic, box lattices, group convolution and the
//! coordinate and polar forms of the Heisenberg Laplacian.
//!
//! Coordinates are stored flat as `[x_1..x_n, y_1..y_n, s]`.

use crate::error::{Error, Result};
use crate::spherical_transform::RadialProfile;
use ndarray::Array2;

/// A point (x, y, s) of H_n.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: f64,
}

impl GroupPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, s: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::param("n", "must be at least 1"));
        }
        Ok(Self { x, y, s })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            y: vec![0.0; n],
            s: 0.0,
        }
    }

    /// Builds a point from the flat layout `[x.., y.., s]`.
    pub fn from_coords(n: usize, c: &[f64]) -> Result<Self> {
        if c.len() != 2 * n + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * n + 1,
                got: c.len(),
            });
        }
        Self::new(c[..n].to_vec(), c[n..2 * n].to_vec(), c[2 * n])
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(2 * self.n() + 1);
        c.extend_from_slice(&self.x);
        c.extend_from_slice(&self.y);
        c.push(self.s);
        c
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn inverse(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| -v).collect(),
            y: self.y.iter().map(|v| -v).collect(),
            s: -self.s,
        }
    }

    /// |z|^2 = sum of x_j^2 + y_j^2.
    pub fn z_norm_sq(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|v| v * v).sum()
    }
}

/// Im<z, z~> = sum_j (y_j x~_j - x_j y~_j) for flat `[x.., y..]` slices.
#[inline]
pub fn im_hermitian(n: usize, z: &[f64], zt: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..n {
        acc += z[n + j] * zt[j] - z[j] * zt[n + j];
    }
    acc
}

/// Sign of the central twist term. `Flipped` exists only for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TwistSign {
    #[default]
    Standard,
    Flipped,
}

impl TwistSign {
    #[inline]
    fn factor(self) -> f64 {
        match self {
            TwistSign::Standard => 1.0,
            TwistSign::Flipped => -1.0,
        }
    }
}

/// (z,s)·(z~,s~) = (z+z~, s+s~+½Im<z,z~>).
pub fn group_mul(p: &GroupPoint, q: &GroupPoint) -> Result<GroupPoint> {
    let n = p.n();
    if q.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q.n(),
        });
    }
    let mut twist = 0.0;
    for j in 0..n {
        twist += p.y[j] * q.x[j] - p.x[j] * q.y[j];
    }
    Ok(GroupPoint {
        x: p.x.iter().zip(&q.x).map(|(a, b)| a + b).collect(),
        y: p.y.iter().zip(&q.y).map(|(a, b)| a + b).collect(),
        s: p.s + q.s + 0.5 * twist,
    })
}

/// δ_r(z,s) = (r^{1/2} z, r s).
pub fn dilate(r: f64, p: &GroupPoint) -> Result<GroupPoint> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", format!("dilation factor must be positive, got {r}")));
    }
    let sr = r.sqrt();
    Ok(GroupPoint {
        x: p.x.iter().map(|v| sr * v).collect(),
        y: p.y.iter().map(|v| sr * v).collect(),
        s: r * p.s,
    })
}

/// Argument of the kernel K(p,q) = J(p·q^{-1}): returns σ and fills `w = z_p - z_q`.
#[inline]
pub fn kernel_argument(n: usize, p: &[f64], q: &[f64], sign: TwistSign, w: &mut [f64]) -> f64 {
    for a in 0..2 * n {
        w[a] = p[a] - q[a];
    }
    p[2 * n] - q[2 * n] - sign.factor() * 0.5 * im_hermitian(n, p, q)
}

/// A kernel on H_n that the lattice machinery can evaluate.
pub trait GroupKernel {
    fn n(&self) -> usize;
    /// Radius of the support in |z|.
    fn support_z(&self) -> f64;
    /// Half-width of the support in the central variable.
    fn support_s(&self) -> f64;
    /// J(w, σ) with `w` of length 2n.
    fn value(&self, w: &[f64], sigma: f64) -> f64;
}

/// Uniform box lattice in R^{2n+1} with an Ω membership mask.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDomain {
    n: usize,
    h: Vec<f64>,
    lower: Vec<f64>,
    counts: Vec<usize>,
    strides: Vec<usize>,
    mask: Vec<bool>,
}

impl LatticeDomain {
    pub fn new(
        n: usize,
        h: Vec<f64>,
        lower: Vec<f64>,
        counts: Vec<usize>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        let d = 2 * n + 1;
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if h.len() != d || lower.len() != d || counts.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: h.len().min(lower.len()).min(counts.len()),
            });
        }
        if h.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::param("h", "spacings must be positive"));
        }
        if counts.iter().any(|c| *c == 0) {
            return Err(Error::param("counts", "every axis needs at least one node"));
        }
        let total: usize = counts.iter().product();
        if mask.len() != total {
            return Err(Error::param(
                "mask",
                format!("length {} does not match node count {total}", mask.len()),
            ));
        }
        if !mask.iter().any(|m| *m) {
            return Err(Error::param("mask", "Ω is empty"));
        }
        let mut strides = vec![1; d];
        for a in (0..d - 1).rev() {
            strides[a] = strides[a + 1] * counts[a + 1];
        }
        Ok(Self {
            n,
            h,
            lower,
            counts,
            strides,
            mask,
        })
    }

    /// Centred box: Ω has `omega_z` nodes on every z axis and `omega_s` on the s axis,
    /// surrounded by `collar_z` and `collar_s` exterior nodes per side.
    pub fn centered_box(
        n: usize,
        h_z: f64,
        h_s: f64,
        omega_z: usize,
        omega_s: usize,
        collar_z: usize,
        collar_s: usize,
    ) -> Result<Self> {
        if omega_z == 0 || omega_s == 0 {
            return Err(Error::param("omega", "Ω needs at least one node per axis"));
        }
        let d = 2 * n + 1;
        let mut h = vec![h_z; d];
        h[2 * n] = h_s;
        let mut counts = vec![omega_z + 2 * collar_z; d];
        counts[2 * n] = omega_s + 2 * collar_s;
        let lower: Vec<f64> = (0..d)
            .map(|a| -0.5 * (counts[a] as f64 - 1.0) * h[a])
            .collect();
        let total: usize = counts.iter().product();
        let mut mask = vec![false; total];
        let mut mi = vec![0usize; d];
        for (idx, m) in mask.iter_mut().enumerate() {
            let mut rem = idx;
            for a in (0..d).rev() {
                mi[a] = rem % counts[a];
                rem /= counts[a];
            }
            *m = (0..d).all(|a| {
                let c = if a == 2 * n { collar_s } else { collar_z };
                mi[a] >= c && mi[a] < counts[a] - c
            });
        }
        Self::new(n, h, lower, counts, mask)
    }

    /// Centred box whose collar is wide enough for a kernel with the given support.
    /// `margin` extra cells are added on every side.
    pub fn box_for_kernel(
        n: usize,
        h_z: f64,
        h_s: f64,
        omega_z: usize,
        omega_s: usize,
        support_z: f64,
        support_s: f64,
        margin: usize,
    ) -> Result<Self> {
        let cz = (support_z / h_z).ceil() as usize + margin;
        let half_z = 0.5 * (omega_z as f64 - 1.0) * h_z;
        let zmax = (2.0 * n as f64).sqrt() * half_z;
        let reach_s = support_s + 0.5 * zmax * support_z;
        let cs = (reach_s / h_s).ceil() as usize + margin;
        Self::centered_box(n, h_z, h_s, omega_z, omega_s, cz, cs)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }
    pub fn h(&self) -> &[f64] {
        &self.h
    }
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
    pub fn node_count(&self) -> usize {
        self.mask.len()
    }
    /// Quadrature weight h^{2n+1} (product of the axis spacings).
    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }
    pub fn is_omega(&self, idx: usize) -> bool {
        self.mask[idx]
    }
    pub fn omega_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|i| self.mask[*i]).collect()
    }
    pub fn exterior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|i| !self.mask[*i]).collect()
    }

    /// Coordinate of index `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + i as f64 * self.h[axis]
    }

    pub fn multi_index(&self, idx: usize, out: &mut [usize]) {
        let mut rem = idx;
        for a in (0..self.dim()).rev() {
            out[a] = rem % self.counts[a];
            rem /= self.counts[a];
        }
    }

    pub fn index(&self, mi: &[usize]) -> usize {
        mi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn coords(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for a in (0..self.dim()).rev() {
            out[a] = self.coord(a, rem % self.counts[a]);
            rem /= self.counts[a];
        }
    }

    pub fn point(&self, idx: usize) -> GroupPoint {
        let mut c = vec![0.0; self.dim()];
        self.coords(idx, &mut c);
        GroupPoint::from_coords(self.n, &c).expect("lattice layout matches n")
    }

    /// Same geometry with a different Ω mask.
    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self> {
        Self::new(
            self.n,
            self.h.clone(),
            self.lower.clone(),
            self.counts.clone(),
            mask,
        )
    }

    /// Visits every node q with |z_p - z_q| <= r_z and |σ| <= r_s, in increasing index order.
    /// The callback receives (q, w = z_p - z_q, σ).
    pub fn for_each_neighbor<F>(
        &self,
        p: usize,
        r_z: f64,
        r_s: f64,
        sign: TwistSign,
        mut visit: F,
    ) -> Result<()>
    where
        F: FnMut(usize, &[f64], f64),
    {
        let n = self.n;
        let d = self.dim();
        let mut pc = vec![0.0; d];
        let mut pm = vec![0usize; d];
        self.coords(p, &mut pc);
        self.multi_index(p, &mut pm);

        let mut lo = vec![0usize; 2 * n];
        let mut hi = vec![0usize; 2 * n];
        for a in 0..2 * n {
            let m = (r_z / self.h[a] * (1.0 + 1e-12)).floor() as usize;
            if pm[a] < m || pm[a] + m >= self.counts[a] {
                return Err(Error::SupportOverflow { node: p });
            }
            lo[a] = pm[a] - m;
            hi[a] = pm[a] + m;
        }
        let rz2 = r_z * r_z * (1.0 + 1e-12);
        let mut qm = lo.clone();
        let mut qc = vec![0.0; d];
        let mut w = vec![0.0; 2 * n];
        let s_axis = 2 * n;
        let ns = self.counts[s_axis];
        loop {
            let mut wn2 = 0.0;
            for a in 0..2 * n {
                qc[a] = self.coord(a, qm[a]);
                let dw = pc[a] - qc[a];
                wn2 += dw * dw;
            }
            if wn2 <= rz2 {
                // σ = s_p - s_q + tw, so s_q ranges over [s_p + tw - r_s, s_p + tw + r_s].
                let tw = -sign.factor() * 0.5 * im_hermitian(n, &pc, &qc);
                let centre = pc[s_axis] + tw;
                let jlo = ((centre - r_s - self.lower[s_axis]) / self.h[s_axis] - 1e-9).ceil();
                let jhi = ((centre + r_s - self.lower[s_axis]) / self.h[s_axis] + 1e-9).floor();
                if jlo < 0.0 || jhi >= ns as f64 {
                    return Err(Error::SupportOverflow { node: p });
                }
                let base: usize = (0..2 * n).map(|a| qm[a] * self.strides[a]).sum();
                for j in jlo as usize..=jhi as usize {
                    qc[s_axis] = self.coord(s_axis, j);
                    let sigma = kernel_argument(n, &pc, &qc, sign, &mut w);
                    visit(base + j, &w, sigma);
                }
            }
            // odometer over the z axes, last z axis fastest
            let mut a = 2 * n;
            loop {
                if a == 0 {
                    return Ok(());
                }
                a -= 1;
                if qm[a] < hi[a] {
                    qm[a] += 1;
                    break;
                }
                qm[a] = lo[a];
            }
        }
    }
}

/// Real-valued samples on every lattice node at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub t: f64,
}

impl Field {
    pub fn zeros(lattice: &LatticeDomain) -> Self {
        Self {
            values: vec![0.0; lattice.node_count()],
            t: 0.0,
        }
    }

    pub fn constant(lattice: &LatticeDomain, c: f64) -> Self {
        Self {
            values: vec![c; lattice.node_count()],
            t: 0.0,
        }
    }

    /// Samples `f` at every node; `f` receives the flat coordinates.
    pub fn sample<F: Fn(&[f64]) -> f64>(lattice: &LatticeDomain, f: F) -> Self {
        let mut c = vec![0.0; lattice.dim()];
        let values = (0..lattice.node_count())
            .map(|i| {
                lattice.coords(i, &mut c);
                f(&c)
            })
            .collect();
        Self { values, t: 0.0 }
    }

    /// Uniform draws from [lo, hi) at every node, exterior included (ChaCha8 stream from `seed`).
    pub fn random(lattice: &LatticeDomain, seed: u64, lo: f64, hi: f64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Self {
            values: (0..lattice.node_count()).map(|_| rng.gen_range(lo..hi)).collect(),
            t: 0.0,
        }
    }

    /// Uniform draws from [lo, hi) on Ω nodes (ChaCha8 stream from `seed`), zero outside Ω.
    pub fn random_omega(lattice: &LatticeDomain, seed: u64, lo: f64, hi: f64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = Self::zeros(lattice);
        for p in lattice.omega_nodes() {
            f.values[p] = rng.gen_range(lo..hi);
        }
        f
    }

    pub fn check(&self, lattice: &LatticeDomain) -> Result<()> {
        if self.values.len() != lattice.node_count() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, lattice has {} nodes",
                self.values.len(),
                lattice.node_count()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("field", "non-finite entry"));
        }
        Ok(())
    }
}

/// Left convolution (J∗u)(p) = Σ_q J(p·q^{-1}) u(q) h^{2n+1}, evaluated at Ω nodes.
/// Exterior entries of the result are zero.
pub fn group_convolve<K: GroupKernel>(
    f: &Field,
    kernel: &K,
    lattice: &LatticeDomain,
) -> Result<Field> {
    group_convolve_signed(f, kernel, lattice, TwistSign::Standard)
}

pub fn group_convolve_signed<K: GroupKernel>(
    f: &Field,
    kernel: &K,
    lattice: &LatticeDomain,
    sign: TwistSign,
) -> Result<Field> {
    if kernel.n() != lattice.n() {
        return Err(Error::DimensionMismatch {
            expected: lattice.n(),
            got: kernel.n(),
        });
    }
    f.check(lattice)?;
    let vol = lattice.cell_volume();
    let mut out = vec![0.0; lattice.node_count()];
    for p in lattice.omega_nodes() {
        let mut acc = 0.0;
        lattice.for_each_neighbor(p, kernel.support_z(), kernel.support_s(), sign, |q, w, sigma| {
            acc += kernel.value(w, sigma) * vol * f.values[q];
        })?;
        out[p] = acc;
    }
    Ok(Field {
        values: out,
        t: f.t,
    })
}

/// Centred-difference Heisenberg Laplacian
/// L = Σ(∂²_{x_j} + ∂²_{y_j}) + ¼|z|²∂²_s + ∂_s Σ(x_j∂_{y_j} - y_j∂_{x_j}) at Ω nodes.
/// Exterior entries of the result are zero.
pub fn heisenberg_laplacian_apply(v: &Field, lattice: &LatticeDomain) -> Result<Field> {
    v.check(lattice)?;
    let mut out = vec![0.0; lattice.node_count()];
    for p in lattice.omega_nodes() {
        out[p] = laplacian_at(&v.values, lattice, p)?;
    }
    Ok(Field {
        values: out,
        t: v.t,
    })
}

/// Stencil coefficients of L at node `p` as (offset node, weight) pairs, centre included.
pub(crate) fn laplacian_stencil(
    lattice: &LatticeDomain,
    p: usize,
    out: &mut Vec<(usize, f64)>,
) -> Result<()> {
    out.clear();
    let n = lattice.n();
    let d = lattice.dim();
    let mut mi = vec![0usize; d];
    let mut c = vec![0.0; d];
    lattice.multi_index(p, &mut mi);
    lattice.coords(p, &mut c);
    for a in 0..d {
        if mi[a] == 0 || mi[a] + 1 >= lattice.counts()[a] {
            return Err(Error::StencilOutOfBounds { node: p });
        }
    }
    let h = lattice.h();
    let sa = 2 * n;
    let ss = lattice.stride(sa) as isize;
    let z2: f64 = c[..2 * n].iter().map(|v| v * v).sum();
    let mut centre = 0.0;
    for a in 0..2 * n {
        let st = lattice.stride(a);
        let w = 1.0 / (h[a] * h[a]);
        out.push((p + st, w));
        out.push((p - st, w));
        centre -= 2.0 * w;
    }
    let ws = 0.25 * z2 / (h[sa] * h[sa]);
    out.push((p + lattice.stride(sa), ws));
    out.push((p - lattice.stride(sa), ws));
    centre -= 2.0 * ws;
    out.push((p, centre));
    // x_j ∂_s∂_{y_j} - y_j ∂_s∂_{x_j}
    for j in 0..n {
        for (axis, coef) in [(n + j, c[j]), (j, -c[n + j])] {
            if coef == 0.0 {
                continue;
            }
            let st = lattice.stride(axis) as isize;
            let w = coef / (4.0 * h[axis] * h[sa]);
            let pi = p as isize;
            out.push(((pi + st + ss) as usize, w));
            out.push(((pi + st - ss) as usize, -w));
            out.push(((pi - st + ss) as usize, -w));
            out.push(((pi - st - ss) as usize, w));
        }
    }
    Ok(())
}

pub(crate) fn laplacian_at(values: &[f64], lattice: &LatticeDomain, p: usize) -> Result<f64> {
    let mut st = Vec::with_capacity(8 * lattice.n() + 4);
    laplacian_stencil(lattice, p, &mut st)?;
    Ok(st.iter().map(|(q, w)| w * values[*q]).sum())
}

/// Polar form L = ∂²_r + ((2n-1)/r)∂_r + (r²/4)∂²_s on a radial profile.
/// At r = 0 the even reflection gives 2n ∂²_r; outer edges use one-sided second-order differences.
pub fn radial_laplacian_apply(f: &RadialProfile) -> RadialProfile {
    let (nr, ns) = f.values.dim();
    let hr = f.hr();
    let hs = f.hs();
    let n = f.n as f64;
    let mut out = Array2::<f64>::zeros((nr, ns));
    let v = &f.values;
    for i in 0..nr {
        let r = f.r[i];
        for j in 0..ns {
            let (drr, dr) = if i == 0 {
                let d2 = if nr > 1 { 2.0 * (v[[1, j]] - v[[0, j]]) / (hr * hr) } else { 0.0 };
                (d2, 0.0)
            } else if i + 1 < nr {
                (
                    (v[[i + 1, j]] - 2.0 * v[[i, j]] + v[[i - 1, j]]) / (hr * hr),
                    (v[[i + 1, j]] - v[[i - 1, j]]) / (2.0 * hr),
                )
            } else {
                one_sided(|k| v[[i - k, j]], hr)
            };
            let dss = if ns < 4 {
                0.0
            } else if j == 0 {
                one_sided(|k| v[[i, k]], hs).0
            } else if j + 1 == ns {
                one_sided(|k| v[[i, j - k]], hs).0
            } else {
                (v[[i, j + 1]] - 2.0 * v[[i, j]] + v[[i, j - 1]]) / (hs * hs)
            };
            out[[i, j]] = if i == 0 {
                2.0 * n * drr
            } else {
                drr + (2.0 * n - 1.0) / r * dr + 0.25 * r * r * dss
            };
        }
    }
    RadialProfile {
        values: out,
        ..f.clone()
    }
}

/// Second and first derivative at an edge from samples g(0), g(1), g(2), g(3) stepping inward.
/// The first derivative is oriented along the outward direction.
fn one_sided<G: Fn(usize) -> f64>(g: G, h: f64) -> (f64, f64) {
    let d2 = (2.0 * g(0) - 5.0 * g(1) + 4.0 * g(2) - g(3)) / (h * h);
    let d1 = (3.0 * g(0) - 4.0 * g(1) + g(2)) / (2.0 * h);
    (d2, d1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, s: f64) -> GroupPoint {
        GroupPoint::new(vec![x], vec![y], s).unwrap()
    }

    #[test]
    fn product_of_unit_vectors() {
        let r = group_mul(&pt(1.0, 0.0, 0.0), &pt(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(r, pt(1.0, 1.0, -0.5));
    }

    #[test]
    fn identity_and_inverse() {
        let p = pt(0.3, -1.2, 2.5);
        assert_eq!(group_mul(&p, &GroupPoint::identity(1)).unwrap(), p);
        let e = group_mul(&p, &p.inverse()).unwrap();
        assert!(e.coords().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = GroupPoint::identity(1);
        let q = GroupPoint::identity(2);
        assert!(matches!(group_mul(&p, &q), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dilation_examples() {
        let p = pt(1.0, 0.0, 1.0);
        assert_eq!(dilate(4.0, &p).unwrap(), pt(2.0, 0.0, 4.0));
        assert_eq!(dilate(1.0, &p).unwrap(), p);
        assert!(dilate(0.0, &p).is_err());
        assert!(dilate(-1.0, &p).is_err());
    }

    #[test]
    fn lattice_index_roundtrip() {
        let l = LatticeDomain::centered_box(1, 0.5, 0.25, 3, 4, 1, 2).unwrap();
        assert_eq!(l.counts(), &[5, 5, 8]);
        let mut mi = vec![0; 3];
        for idx in 0..l.node_count() {
            l.multi_index(idx, &mut mi);
            assert_eq!(l.index(&mi), idx);
        }
        assert_eq!(l.omega_nodes().len(), 3 * 3 * 4);
    }

    #[test]
    fn laplacian_of_quadratics() {
        let l = LatticeDomain::centered_box(1, 0.3, 0.2, 5, 5, 1, 1).unwrap();
        let c = Field::constant(&l, 3.0);
        let lc = heisenberg_laplacian_apply(&c, &l).unwrap();
        assert!(lc.values.iter().all(|v| *v == 0.0));
        let x2 = Field::sample(&l, |c| c[0] * c[0]);
        let lx2 = heisenberg_laplacian_apply(&x2, &l).unwrap();
        for p in l.omega_nodes() {
            assert!((lx2.values[p] - 2.0).abs() < 1e-12);
        }
        let s = Field::sample(&l, |c| c[2]);
        let ls = heisenberg_laplacian_apply(&s, &l).unwrap();
        for p in l.omega_nodes() {
            assert!(ls.values[p].abs() < 1e-12);
        }
    }

    #[test]
    fn drift_sign_on_xs() {
        // L(x s) = -y with the standard twist sign.
        let l = LatticeDomain::centered_box(1, 0.3, 0.2, 5, 5, 1, 1).unwrap();
        let v = Field::sample(&l, |c| c[0] * c[2]);
        let lv = heisenberg_laplacian_apply(&v, &l).unwrap();
        let mut c = vec![0.0; 3];
        for p in l.omega_nodes() {
            l.coords(p, &mut c);
            assert!((lv.values[p] + c[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn stencil_needs_collar() {
        let l = LatticeDomain::centered_box(1, 0.3, 0.2, 3, 3, 0, 0).unwrap();
        let v = Field::zeros(&l);
        assert!(matches!(
            heisenberg_laplacian_apply(&v, &l),
            Err(Error::StencilOutOfBounds { .. })
        ));
    }

    #[test]
    fn radial_laplacian_of_r_squared() {
        for (n, expect) in [(1usize, 4.0), (2, 8.0)] {
            let p = RadialProfile::sample(n, 2.0, 1.0, 21, 11, |r, _| r * r);
            let lp = radial_laplacian_apply(&p);
            for i in 0..21 {
                for j in 0..11 {
                    assert!((lp.values[[i, j]] - expect).abs() < 1e-9, "n={n} i={i}");
                }
            }
        }
    }
}
