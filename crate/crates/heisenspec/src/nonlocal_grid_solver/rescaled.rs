use std::collections::HashMap;

use super::kernel::{bump, rescaled_kernel, KernelSpec};
use super::matrix::LinearGenerator;
use crate::error::{Error, Result};
use crate::group_core::{Field, GroupKernel, LatticeDomain, TwistSign};

/// Fewest lattice cells allowed across either support axis of J^ε.
pub const MIN_CELLS_ACROSS: f64 = 6.0;

/// L̃_ε u(p) = ε^{-2} Σ_q J^ε(p·q^{-1}) (u(q) - u(p)) h^{2n+1}, matrix-free.
///
/// Rows that share a z position share a stencil because the kernel argument is
/// invariant under common s-translations. Each stencil is quadrature-corrected:
/// the s-sum of every z-offset column is rescaled to the exact ∫b(σ/R_s)dσ, and the
/// whole stencil is rescaled so that Σ K w₁² = 2ε², the continuum second moment.
#[derive(Debug, Clone)]
pub struct RescaledOperator {
    pub eps: f64,
    pub kernel: KernelSpec,
    omega: Vec<usize>,
    stencil_of: Vec<usize>,
    stencils: Vec<Vec<(isize, f64)>>,
    bound: f64,
}

impl RescaledOperator {
    pub fn new(j: &KernelSpec, eps: f64, lattice: &LatticeDomain) -> Result<Self> {
        Self::with_sign(j, eps, lattice, TwistSign::Standard)
    }

    pub fn with_sign(j: &KernelSpec, eps: f64, lattice: &LatticeDomain, sign: TwistSign) -> Result<Self> {
        if j.n != lattice.n() {
            return Err(Error::DimensionMismatch {
                expected: lattice.n(),
                got: j.n,
            });
        }
        let je = rescaled_kernel(j, eps)?;
        je.check_resolution(lattice, MIN_CELLS_ACROSS)?;
        let n = lattice.n();
        let d = lattice.dim();
        let s_axis = 2 * n;
        let ns = lattice.counts()[s_axis];
        let vol = lattice.cell_volume();
        let h_s = lattice.h()[s_axis];
        let exact_s = 2.0 * je.r_s * 16.0 / 15.0;
        let target_m2 = 2.0 * eps * eps;

        let omega = lattice.omega_nodes();
        let mut key_of: HashMap<usize, usize> = HashMap::new();
        let mut stencil_of = Vec::with_capacity(omega.len());
        let mut stencils: Vec<Vec<(isize, f64)>> = Vec::new();
        let mut s_span: Vec<(isize, isize)> = Vec::new();
        let mut mi = vec![0usize; d];
        for &p in &omega {
            let zkey = p / ns;
            if let Some(&k) = key_of.get(&zkey) {
                stencil_of.push(k);
                continue;
            }
            lattice.multi_index(p, &mut mi);
            let ps = mi[s_axis] as isize;
            // entries grouped by z offset: (flat offset, σ, J value)
            let mut groups: Vec<(Vec<f64>, Vec<(isize, f64, f64)>)> = Vec::new();
            let mut qmi = vec![0usize; d];
            lattice.for_each_neighbor(p, je.r_z, je.r_s, sign, |q, w, sigma| {
                let off = q as isize - p as isize;
                let v = je.value(w, sigma) * vol;
                match groups.last_mut() {
                    Some((gw, entries)) if gw.as_slice() == w => entries.push((off, sigma, v)),
                    _ => groups.push((w.to_vec(), vec![(off, sigma, v)])),
                }
            })?;
            let mut st = Vec::new();
            let mut m2 = 0.0;
            let (mut lo, mut hi) = (isize::MAX, isize::MIN);
            for (w, entries) in &groups {
                let sb: f64 = entries.iter().map(|e| bump(e.1 / je.r_s)).sum::<f64>() * h_s;
                if sb == 0.0 {
                    continue;
                }
                let fix = exact_s / sb;
                for &(off, _, v) in entries {
                    if v == 0.0 {
                        continue;
                    }
                    let wv = v * fix;
                    m2 += wv * w[0] * w[0];
                    lattice.multi_index((p as isize + off) as usize, &mut qmi);
                    let ds = qmi[s_axis] as isize - ps;
                    lo = lo.min(ds);
                    hi = hi.max(ds);
                    st.push((off, wv));
                }
            }
            if !(m2 > 0.0) {
                return Err(Error::UnderResolved {
                    axis: "z".into(),
                    cells: 0.0,
                    required: MIN_CELLS_ACROSS,
                });
            }
            let f = target_m2 / m2 / (eps * eps);
            for e in st.iter_mut() {
                e.1 *= f;
            }
            let k = stencils.len();
            stencils.push(st);
            s_span.push((lo, hi));
            key_of.insert(zkey, k);
            stencil_of.push(k);
        }
        // the representative row passed the support check; the other s rows must too
        for (i, &p) in omega.iter().enumerate() {
            let (lo, hi) = s_span[stencil_of[i]];
            let js = (p % ns) as isize;
            if js + lo < 0 || js + hi >= ns as isize {
                return Err(Error::SupportOverflow { node: p });
            }
        }
        let bound = stencils
            .iter()
            .map(|st| 2.0 * st.iter().map(|e| e.1).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(Self {
            eps,
            kernel: je,
            omega,
            stencil_of,
            stencils,
            bound,
        })
    }

    /// Number of stored stencil entries.
    pub fn stored_entries(&self) -> usize {
        self.stencils.iter().map(|s| s.len()).sum()
    }
}

impl LinearGenerator for RescaledOperator {
    fn omega(&self) -> &[usize] {
        &self.omega
    }
    fn apply(&self, full: &[f64], out: &mut [f64]) {
        for (i, &p) in self.omega.iter().enumerate() {
            let up = full[p];
            let mut acc = 0.0;
            for &(off, w) in &self.stencils[self.stencil_of[i]] {
                acc += w * (full[(p as isize + off) as usize] - up);
            }
            out[i] = acc;
        }
    }
    fn spectral_bound(&self) -> f64 {
        self.bound
    }
}

/// L̃_ε v on Ω nodes; exterior entries of the result are zero.
pub fn apply_rescaled_operator(
    j: &KernelSpec,
    eps: f64,
    v: &Field,
    lattice: &LatticeDomain,
) -> Result<Field> {
    v.check(lattice)?;
    let op = RescaledOperator::new(j, eps, lattice)?;
    let mut buf = vec![0.0; op.omega.len()];
    op.apply(&v.values, &mut buf);
    let mut out = vec![0.0; lattice.node_count()];
    for (i, &p) in op.omega.iter().enumerate() {
        out[p] = buf[i];
    }
    Ok(Field {
        values: out,
        t: v.t,
    })
}

/// Lattice spacings (h_z, h_s) that put `cells` cells across each support axis of J^ε.
pub fn spacing_for(j: &KernelSpec, eps: f64, cells: f64) -> (f64, f64) {
    (2.0 * eps * j.r_z / cells, 2.0 * eps * eps * j.r_s / cells)
}
