use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::group_core::{kernel_argument, GroupKernel, LatticeDomain, TwistSign};

/// Dense kernel matrices are refused beyond this many nodes.
pub const DENSE_NODE_LIMIT: usize = 6000;

/// K[p][q] = J(p·q^{-1}) h^{2n+1} over a node list.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    /// Lattice indices labelling rows and columns.
    pub nodes: Vec<usize>,
    pub entries: DMatrix<f64>,
    pub max_asymmetry: f64,
    pub symmetric: bool,
    /// Quadrature weight h^{2n+1} of the lattice it was built on.
    pub cell_volume: f64,
}

impl KernelMatrix {
    /// Wraps given entries, e.g. for hand-built oracles.
    pub fn from_entries(nodes: Vec<usize>, entries: DMatrix<f64>, cell_volume: f64) -> Result<Self> {
        if entries.nrows() != nodes.len() || entries.ncols() != nodes.len() {
            return Err(Error::GridMismatch(format!(
                "{} nodes but a {}x{} matrix",
                nodes.len(),
                entries.nrows(),
                entries.ncols()
            )));
        }
        let asym = asymmetry(&entries);
        Ok(Self {
            nodes,
            entries,
            max_asymmetry: asym,
            symmetric: asym == 0.0,
            cell_volume,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Row-and-column restriction to the Ω nodes of `lattice`.
    pub fn omega_block(&self, lattice: &LatticeDomain) -> Result<Self> {
        let omega = lattice.omega_nodes();
        let mut pos = Vec::with_capacity(omega.len());
        for p in &omega {
            match self.nodes.binary_search(p) {
                Ok(i) => pos.push(i),
                Err(_) => {
                    return Err(Error::GridMismatch(format!(
                        "Ω node {p} is not a row of the kernel matrix"
                    )))
                }
            }
        }
        let m = omega.len();
        let entries = DMatrix::from_fn(m, m, |i, j| self.entries[(pos[i], pos[j])]);
        Self::from_entries(omega, entries, self.cell_volume)
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.len())
            .map(|i| self.entries.row(i).iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Plain row-by-row product in increasing column order.
    pub fn matvec(&self, u: &[f64]) -> Vec<f64> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += self.entries[(i, j)] * u[j];
                }
                acc
            })
            .collect()
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut a: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i {
            a = a.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    a
}

/// Dense kernel matrix over every lattice node, by the brute-force double loop.
pub fn build_kernel_matrix<K: GroupKernel>(j: &K, lattice: &LatticeDomain) -> Result<KernelMatrix> {
    build_kernel_matrix_signed(j, lattice, TwistSign::Standard)
}

pub fn build_kernel_matrix_signed<K: GroupKernel>(
    j: &K,
    lattice: &LatticeDomain,
    sign: TwistSign,
) -> Result<KernelMatrix> {
    if j.n() != lattice.n() {
        return Err(Error::DimensionMismatch {
            expected: lattice.n(),
            got: j.n(),
        });
    }
    let total = lattice.node_count();
    if total > DENSE_NODE_LIMIT {
        return Err(Error::TooLarge(format!(
            "dense kernel matrix over {total} nodes (limit {DENSE_NODE_LIMIT})"
        )));
    }
    // collar check: every Ω row must see its whole support inside the lattice
    for p in lattice.omega_nodes() {
        lattice.for_each_neighbor(p, j.support_z(), j.support_s(), sign, |_, _, _| {})?;
    }
    let n = lattice.n();
    let d = lattice.dim();
    let vol = lattice.cell_volume();
    let mut coords = vec![0.0; total * d];
    for (i, c) in coords.chunks_mut(d).enumerate() {
        lattice.coords(i, c);
    }
    let mut w = vec![0.0; 2 * n];
    let mut entries = DMatrix::zeros(total, total);
    for p in 0..total {
        let pc = &coords[p * d..(p + 1) * d];
        for q in 0..total {
            let qc = &coords[q * d..(q + 1) * d];
            let sigma = kernel_argument(n, pc, qc, sign, &mut w);
            entries[(p, q)] = j.value(&w, sigma) * vol;
        }
    }
    let asym = asymmetry(&entries);
    Ok(KernelMatrix {
        nodes: (0..total).collect(),
        entries,
        max_asymmetry: asym,
        symmetric: asym == 0.0,
        cell_volume: vol,
    })
}

/// A linear generator u' = A u acting on Ω, reading a full-lattice state.
pub trait LinearGenerator {
    /// Lattice indices of the rows, increasing.
    fn omega(&self) -> &[usize];
    /// out[i] = (A u)(omega[i]); `full` holds values on every lattice node.
    fn apply(&self, full: &[f64], out: &mut [f64]);
    /// Gershgorin bound on the spectral radius of the Ω block.
    fn spectral_bound(&self) -> f64;
    /// Lipschitz constant C used to size Picard windows, (C+1)t₀ < 1.
    fn picard_constant(&self) -> f64 {
        self.spectral_bound()
    }
    /// Whether exterior values enter the right-hand side.
    fn reads_exterior(&self) -> bool {
        true
    }
}

/// Row-compressed generator: (A u)(p) = Σ_q a_pq u(q) + diag(p) u(p).
#[derive(Debug, Clone)]
pub struct SparseGenerator {
    omega: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
    bound: f64,
    picard: f64,
    exterior: bool,
}

impl SparseGenerator {
    /// u' = J∗u - u with exterior values as data.
    pub fn dirichlet<K: GroupKernel>(j: &K, lattice: &LatticeDomain, sign: TwistSign) -> Result<Self> {
        let mut g = Self::assemble(j, lattice, sign, false)?;
        g.diag.iter_mut().for_each(|d| *d = -1.0);
        g.finish(j, lattice, true);
        Ok(g)
    }

    /// u' = Σ_{q∈Ω} K[p][q](u(q) - u(p)); exterior values are never read.
    pub fn neumann<K: GroupKernel>(j: &K, lattice: &LatticeDomain, sign: TwistSign) -> Result<Self> {
        let mut g = Self::assemble(j, lattice, sign, true)?;
        for (i, d) in g.diag.iter_mut().enumerate() {
            let s: f64 = g.vals[g.row_ptr[i]..g.row_ptr[i + 1]].iter().sum();
            *d = -s;
        }
        g.finish(j, lattice, false);
        Ok(g)
    }

    fn assemble<K: GroupKernel>(
        j: &K,
        lattice: &LatticeDomain,
        sign: TwistSign,
        omega_only: bool,
    ) -> Result<Self> {
        if j.n() != lattice.n() {
            return Err(Error::DimensionMismatch {
                expected: lattice.n(),
                got: j.n(),
            });
        }
        let omega = lattice.omega_nodes();
        let vol = lattice.cell_volume();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &p in &omega {
            lattice.for_each_neighbor(p, j.support_z(), j.support_s(), sign, |q, w, sigma| {
                if omega_only && !lattice.is_omega(q) {
                    return;
                }
                let v = j.value(w, sigma) * vol;
                if v != 0.0 {
                    cols.push(q);
                    vals.push(v);
                }
            })?;
            row_ptr.push(cols.len());
        }
        let m = omega.len();
        Ok(Self {
            omega,
            row_ptr,
            cols,
            vals,
            diag: vec![0.0; m],
            bound: 0.0,
            picard: 0.0,
            exterior: !omega_only,
        })
    }

    fn finish<K: GroupKernel>(&mut self, j: &K, lattice: &LatticeDomain, dirichlet: bool) {
        let mut pos = vec![usize::MAX; lattice.node_count()];
        for (i, p) in self.omega.iter().enumerate() {
            pos[*p] = i;
        }
        let mut bound: f64 = 0.0;
        for i in 0..self.omega.len() {
            let mut diag = self.diag[i];
            let mut off = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == self.omega[i] {
                    diag += self.vals[k];
                } else if pos[self.cols[k]] != usize::MAX {
                    off += self.vals[k];
                }
            }
            bound = bound.max(diag.abs() + off);
        }
        self.bound = bound;
        // C = ‖J‖∞ |Ω| for the Dirichlet problem; the Neumann map doubles it
        let zero = vec![0.0; 2 * j.n()];
        let omega_measure = self.omega.len() as f64 * lattice.cell_volume();
        let c = j.value(&zero, 0.0) * omega_measure;
        self.picard = if dirichlet { c } else { 2.0 * c }.max(bound);
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }
}

impl LinearGenerator for SparseGenerator {
    fn omega(&self) -> &[usize] {
        &self.omega
    }
    fn apply(&self, full: &[f64], out: &mut [f64]) {
        for i in 0..self.omega.len() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * full[self.cols[k]];
            }
            out[i] = acc + self.diag[i] * full[self.omega[i]];
        }
    }
    fn spectral_bound(&self) -> f64 {
        self.bound
    }
    fn picard_constant(&self) -> f64 {
        self.picard
    }
    fn reads_exterior(&self) -> bool {
        self.exterior
    }
}
