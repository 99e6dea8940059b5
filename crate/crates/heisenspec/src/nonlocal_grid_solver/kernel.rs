use crate::error::{Error, Result};
use crate::group_core::{GroupKernel, LatticeDomain};
use crate::spherical_transform::sphere_area;

/// Profile of the shipped kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelShape {
    /// c · b(|z|/R_z) · b(s/R_s).
    BallBump,
    /// n = 1 only; coincides with the ball bump after the radial rewrite.
    ProductBump,
}

/// b(τ) = (1 - τ²)² on |τ| ≤ 1.
#[inline]
pub fn bump(t: f64) -> f64 {
    let u = 1.0 - t * t;
    if u <= 0.0 {
        0.0
    } else {
        u * u
    }
}

/// ∫_0^1 τ^m (1-τ²)² dτ.
fn bump_moment(m: usize) -> f64 {
    let m = m as f64;
    1.0 / (m + 1.0) - 2.0 / (m + 3.0) + 1.0 / (m + 5.0)
}

/// J(z,s) = scale · b(|z|/R_z) · b(s/R_s), radial in z and even in s.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub n: usize,
    pub shape: KernelShape,
    pub r_z: f64,
    pub r_s: f64,
    pub scale: f64,
    /// ∫J.
    pub mass: f64,
    /// Second moment per unit mass of the unscaled kernel (∫J x₁² with ∫J = 1).
    pub c1: f64,
    /// Rescaling parameter; 1 for a built kernel.
    pub eps: f64,
}

impl KernelSpec {
    pub fn j00(&self) -> f64 {
        self.scale
    }

    /// ∫ x₁² J / ∫ J.
    pub fn second_moment_z(&self) -> f64 {
        let n = self.n;
        self.r_z * self.r_z / (2.0 * n as f64) * bump_moment(2 * n + 1) / bump_moment(2 * n - 1)
    }

    /// ∫ s² J / ∫ J.
    pub fn second_moment_s(&self) -> f64 {
        self.r_s * self.r_s * bump_moment(2) / bump_moment(0)
    }

    /// Lattice sum Σ J(w,σ) h^{2n+1} over offsets of a node-centred lattice with spacings
    /// (h_z, h_s), weighted by `g(w, σ)`.
    pub fn lattice_sum<G: Fn(&[f64], f64) -> f64>(&self, h_z: f64, h_s: f64, g: G) -> f64 {
        let n = self.n;
        let mz = (self.r_z / h_z).floor() as i64;
        let ms = (self.r_s / h_s).floor() as i64;
        let vol = h_z.powi(2 * n as i32) * h_s;
        let mut idx = vec![-mz; 2 * n];
        let mut w = vec![0.0; 2 * n];
        let mut acc = 0.0;
        loop {
            for a in 0..2 * n {
                w[a] = idx[a] as f64 * h_z;
            }
            if w.iter().map(|v| v * v).sum::<f64>() < self.r_z * self.r_z {
                for j in -ms..=ms {
                    let sg = j as f64 * h_s;
                    acc += self.value(&w, sg) * g(&w, sg);
                }
            }
            let mut a = 2 * n;
            loop {
                if a == 0 {
                    return acc * vol;
                }
                a -= 1;
                if idx[a] < mz {
                    idx[a] += 1;
                    break;
                }
                idx[a] = -mz;
            }
        }
    }

    /// Copy scaled so that the lattice sum of J equals `mass` at spacings (h_z, h_s).
    pub fn lattice_normalized(&self, h_z: f64, h_s: f64) -> Self {
        let m = self.lattice_sum(h_z, h_s, |_, _| 1.0);
        Self {
            scale: self.scale * self.mass / m,
            ..self.clone()
        }
    }

    /// Cells across the support on the z and s axes.
    pub fn cells_across(&self, h_z: f64, h_s: f64) -> (f64, f64) {
        (2.0 * self.r_z / h_z, 2.0 * self.r_s / h_s)
    }

    /// Rejects lattices with fewer than `required` cells across either support axis.
    pub fn check_resolution(&self, lattice: &LatticeDomain, required: f64) -> Result<()> {
        let n = self.n;
        let h = lattice.h();
        let h_z = h[..2 * n].iter().cloned().fold(0.0, f64::max);
        let (cz, cs) = self.cells_across(h_z, h[2 * n]);
        if cz < required {
            return Err(Error::UnderResolved {
                axis: "z".into(),
                cells: cz,
                required,
            });
        }
        if cs < required {
            return Err(Error::UnderResolved {
                axis: "s".into(),
                cells: cs,
                required,
            });
        }
        Ok(())
    }
}

impl GroupKernel for KernelSpec {
    fn n(&self) -> usize {
        self.n
    }
    fn support_z(&self) -> f64 {
        self.r_z
    }
    fn support_s(&self) -> f64 {
        self.r_s
    }
    #[inline]
    fn value(&self, w: &[f64], sigma: f64) -> f64 {
        let rz2: f64 = w.iter().map(|v| v * v).sum();
        let tz = 1.0 - rz2 / (self.r_z * self.r_z);
        if tz <= 0.0 {
            return 0.0;
        }
        self.scale * tz * tz * bump(sigma / self.r_s)
    }
}

/// Builds a kernel of unit mass with R_s chosen so that ∫J s² = ∫J x₁².
pub fn build_kernel(n: usize, shape: KernelShape, r_z: f64) -> Result<KernelSpec> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(r_z > 0.0) || !r_z.is_finite() {
        return Err(Error::param("r_z", "support radius must be positive"));
    }
    if shape == KernelShape::ProductBump && n != 1 {
        return Err(Error::param(
            "shape",
            "product_bump is not U(n)-invariant for n > 1; use ball_bump",
        ));
    }
    let m_z = r_z * r_z / (2.0 * n as f64) * bump_moment(2 * n + 1) / bump_moment(2 * n - 1);
    let ratio_s = bump_moment(2) / bump_moment(0);
    // bisection on R_s² ratio_s = m_z
    let (mut lo, mut hi) = (0.0, r_z.max(1.0));
    while hi * hi * ratio_s < m_z {
        hi *= 2.0;
    }
    let mut iters = 0;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid * mid * ratio_s < m_z {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
        if iters > 200 {
            return Err(Error::NoConvergence("moment matching for R_s".into()));
        }
    }
    let r_s = 0.5 * (lo + hi);
    let int_z = sphere_area(n) * r_z.powi(2 * n as i32) * bump_moment(2 * n - 1);
    let int_s = 2.0 * r_s * bump_moment(0);
    Ok(KernelSpec {
        n,
        shape,
        r_z,
        r_s,
        scale: 1.0 / (int_z * int_s),
        mass: 1.0,
        c1: m_z,
        eps: 1.0,
    })
}

/// J^ε(z,s) = (2C₁^{-1}/ε^{2n+2}) J(z/ε, s/ε²); total mass 2C₁^{-1}.
pub fn rescaled_kernel(j: &KernelSpec, eps: f64) -> Result<KernelSpec> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param("eps", "must be positive"));
    }
    let f = 2.0 / j.c1;
    Ok(KernelSpec {
        r_z: j.r_z * eps,
        r_s: j.r_s * eps * eps,
        scale: j.scale * f / eps.powi(2 * j.n as i32 + 2),
        mass: j.mass * f,
        eps: j.eps * eps,
        ..j.clone()
    })
}

/// A kernel even in z but not in s, for negative controls: J(w,σ) = b(|w|/R_z) b((σ-δ)/R_s).
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedKernel {
    pub base: KernelSpec,
    pub shift: f64,
}

impl GroupKernel for ShiftedKernel {
    fn n(&self) -> usize {
        self.base.n
    }
    fn support_z(&self) -> f64 {
        self.base.r_z
    }
    fn support_s(&self) -> f64 {
        self.base.r_s + self.shift.abs()
    }
    fn value(&self, w: &[f64], sigma: f64) -> f64 {
        self.base.value(w, sigma - self.shift)
    }
}

/// Reach of the kernel in s from a node with |z| ≤ zmax: R_s + ½ zmax R_z.
pub fn s_reach<K: GroupKernel>(k: &K, zmax: f64) -> f64 {
    k.support_s() + 0.5 * zmax * k.support_z()
}

/// Lattice-quadrature check of ∫J and the second moments at spacings (h_z, h_s).
pub fn lattice_moments(j: &KernelSpec, h_z: f64, h_s: f64) -> (f64, f64, f64) {
    let m0 = j.lattice_sum(h_z, h_s, |_, _| 1.0);
    let mx = j.lattice_sum(h_z, h_s, |w, _| w[0] * w[0]);
    let ms = j.lattice_sum(h_z, h_s, |_, s| s * s);
    (m0, mx, ms)
}
