//! Normalized Laguerre polynomials, Bessel functions of integer order and the
//! spherical functions φ_{λ,k}, η_r of the Gelfand pair (U(n), H_n).

use crate::error::{Error, Result};
use crate::group_core::{heisenberg_laplacian_apply, Field, GroupPoint, LatticeDomain};
use num_complex::Complex64;

/// A point of the spectrum: the Laguerre branch (λ ≠ 0, k) or the Bessel ray r ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphericalIndex {
    Laguerre { lambda: f64, k: usize },
    Bessel { r: f64 },
}

impl SphericalIndex {
    pub fn laguerre(lambda: f64, k: usize) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::param("lambda", "must be finite and nonzero"));
        }
        Ok(SphericalIndex::Laguerre { lambda, k })
    }

    pub fn bessel(r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::param("r", "must be finite and nonnegative"));
        }
        Ok(SphericalIndex::Bessel { r })
    }

    /// Eigenvalue of -L: |λ|(2k+n) on the Laguerre branch, r² on the Bessel ray.
    pub fn laplacian_eigenvalue(&self, n: usize) -> f64 {
        match *self {
            SphericalIndex::Laguerre { lambda, k } => lambda.abs() * (2 * k + n) as f64,
            SphericalIndex::Bessel { r } => r * r,
        }
    }
}

/// L_k^α(x) / binom(k+α, k); equals 1 at x = 0.
///
/// Uses the recurrence for the normalized sequence
/// (k+1+α) ψ_{k+1} = (2k+1+α-x) ψ_k - k ψ_{k-1}, which never forms the binomial.
pub fn laguerre_normalized(k: usize, alpha: usize, x: f64) -> f64 {
    let a = alpha as f64;
    let mut p0 = 1.0;
    if k == 0 {
        return p0;
    }
    let mut p1 = (1.0 + a - x) / (1.0 + a);
    for j in 1..k {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0 + a - x) * p1 - jf * p0) / (jf + 1.0 + a);
        p0 = p1;
        p1 = p2;
    }
    p1
}

const RESCALE_AT: f64 = 1e250;

/// Fills `out[k] = L_k^α(x)/binom(k+α,k) · e^{-x/2}` for k = 0..out.len().
///
/// The exponential is tracked as a separate log-scale so large x does not underflow.
pub fn laguerre_functions(alpha: usize, x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let a = alpha as f64;
    let mut log_scale = -0.5 * x;
    let emit = |v: f64, ls: f64| -> f64 {
        if v == 0.0 {
            0.0
        } else {
            let m = ls + v.abs().ln();
            if m < -745.0 {
                0.0
            } else {
                v.signum() * m.exp()
            }
        }
    };
    let mut p0 = 1.0;
    out[0] = emit(p0, log_scale);
    if out.len() == 1 {
        return;
    }
    let mut p1 = (1.0 + a - x) / (1.0 + a);
    out[1] = emit(p1, log_scale);
    for j in 1..out.len() - 1 {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0 + a - x) * p1 - jf * p0) / (jf + 1.0 + a);
        p0 = p1;
        p1 = p2;
        if p1.abs() > RESCALE_AT || p0.abs() > RESCALE_AT {
            p0 /= RESCALE_AT;
            p1 /= RESCALE_AT;
            log_scale += RESCALE_AT.ln();
        }
        out[j + 1] = emit(p1, log_scale);
    }
}

/// Single normalized Laguerre function ψ_k(x) e^{-x/2}.
pub fn laguerre_function(k: usize, alpha: usize, x: f64) -> f64 {
    let mut buf = vec![0.0; k + 1];
    laguerre_functions(alpha, x, &mut buf);
    buf[k]
}

const SERIES_LIMIT: f64 = 12.0;

/// J_ν(x) for integer ν ≥ 0: power series for |x| ≤ 12, Miller's downward recurrence beyond.
pub fn bessel_j(nu: usize, x: f64) -> f64 {
    if x < 0.0 {
        let v = bessel_j(nu, -x);
        return if nu % 2 == 1 { -v } else { v };
    }
    if x <= SERIES_LIMIT {
        bessel_series(nu, x)
    } else {
        bessel_miller(nu, x)
    }
}

fn bessel_series(nu: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let mut term = 1.0;
    for j in 1..=nu {
        term *= half / j as f64;
    }
    let q = -half * half;
    let mut sum = term;
    let mut m = 0usize;
    loop {
        m += 1;
        term *= q / (m as f64 * (m + nu) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && m > 2 {
            break;
        }
        if m > 200 {
            break;
        }
    }
    sum
}

fn bessel_miller(nu: usize, x: f64) -> f64 {
    let start = (x as usize).max(nu) + 40 + (x.sqrt() * 6.0) as usize;
    let start = start + start % 2;
    let mut jp1 = 0.0;
    let mut j = 1e-30;
    let mut norm = 0.0;
    let mut result = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        let km1 = k - 1;
        if km1 == nu {
            result = j;
        }
        if km1 > 0 && km1 % 2 == 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j /= 1e250;
            jp1 /= 1e250;
            norm /= 1e250;
            result /= 1e250;
        }
    }
    norm += j;
    result / norm
}

/// φ_{λ,k}(z,s) = e^{iλs} L_k^{n-1}(|λ||z|²/2) e^{-|λ||z|²/4} with the normalized Laguerre.
pub fn phi(lambda: f64, k: usize, n: usize, p: &GroupPoint) -> Result<Complex64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::param("lambda", "φ needs λ ≠ 0; use eta on the λ = 0 ray"));
    }
    if p.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.n(),
        });
    }
    let x = 0.5 * lambda.abs() * p.z_norm_sq();
    let radial = laguerre_function(k, n - 1, x);
    Ok(Complex64::from_polar(radial, lambda * p.s))
}

/// η_r(z,s) = 2^{n-1}(n-1)! J_{n-1}(r|z|)/(r|z|)^{n-1}; equals 1 at r|z| = 0.
pub fn eta(r: f64, n: usize, p: &GroupPoint) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::param("r", "must be nonnegative"));
    }
    if p.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.n(),
        });
    }
    Ok(eta_radial(n, r * p.z_norm_sq().sqrt()))
}

/// η as a function of ρ = r|z|.
pub fn eta_radial(n: usize, rho: f64) -> f64 {
    let nu = n - 1;
    if rho <= SERIES_LIMIT {
        // (n-1)! Σ_m (-1)^m (ρ/2)^{2m} / (m! (m+n-1)!)
        let q = -0.25 * rho * rho;
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..200 {
            term *= q / (m as f64 * (m + nu) as f64);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        let mut c = 1.0;
        for j in 1..=nu {
            c *= 2.0 * j as f64;
        }
        c * bessel_j(nu, rho) / rho.powi(nu as i32)
    }
}

/// Relative sup error of the lattice eigenrelation Lφ_{λ,k} = -|λ|(2k+n)φ_{λ,k} on the box
/// |x_j|, |y_j|, |s| ≤ `half_width` with spacing `h` on every axis. Real and imaginary parts
/// are differenced separately.
pub fn eigenrelation_error(lambda: f64, k: usize, n: usize, h: f64, half_width: f64) -> Result<f64> {
    if !(h > 0.0) || !(half_width >= h) {
        return Err(Error::param("h", "need 0 < h <= half_width"));
    }
    let cells = (half_width / h).round() as usize;
    if ((cells as f64) * h - half_width).abs() > 1e-9 * half_width {
        return Err(Error::param("h", "half_width must be a whole number of cells"));
    }
    let mu = SphericalIndex::laguerre(lambda, k)?.laplacian_eigenvalue(n);
    let lat = LatticeDomain::centered_box(n, h, h, 2 * cells + 1, 2 * cells + 1, 1, 1)?;
    let d = 2 * n + 1;
    let mut re = Vec::with_capacity(lat.node_count());
    let mut im = Vec::with_capacity(lat.node_count());
    let mut c = vec![0.0; d];
    for idx in 0..lat.node_count() {
        lat.coords(idx, &mut c);
        let v = phi(lambda, k, n, &GroupPoint::from_coords(n, &c)?)?;
        re.push(v.re);
        im.push(v.im);
    }
    let lre = heisenberg_laplacian_apply(&Field { values: re.clone(), t: 0.0 }, &lat)?;
    let lim = heisenberg_laplacian_apply(&Field { values: im.clone(), t: 0.0 }, &lat)?;
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for p in lat.omega_nodes() {
        let dr = lre.values[p] + mu * re[p];
        let di = lim.values[p] + mu * im[p];
        err = err.max(dr.hypot(di));
        scale = scale.max((mu * re[p]).hypot(mu * im[p]));
    }
    Ok(err / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_low_orders() {
        for a in 0..4 {
            assert_eq!(laguerre_normalized(0, a, 3.7), 1.0);
            assert_eq!(laguerre_normalized(17, a, 0.0), 1.0);
        }
        for x in [0.0, 0.5, 2.0, 9.0] {
            assert!((laguerre_normalized(1, 0, x) - (1.0 - x)).abs() < 1e-15);
            // L_2^0(x) = 1 - 2x + x²/2
            let l2 = 1.0 - 2.0 * x + 0.5 * x * x;
            assert!((laguerre_normalized(2, 0, x) - l2).abs() < 1e-13);
            // L_1^1(x)/2 = (2 - x)/2
            assert!((laguerre_normalized(1, 1, x) - (2.0 - x) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn scaled_functions_match_direct_product() {
        let mut buf = vec![0.0; 31];
        for x in [0.0, 0.3, 4.0, 25.0] {
            laguerre_functions(1, x, &mut buf);
            for (k, v) in buf.iter().enumerate() {
                let direct = laguerre_normalized(k, 1, x) * (-0.5 * x).exp();
                assert!((v - direct).abs() < 1e-12 * (1.0 + direct.abs()), "k={k} x={x}");
            }
        }
    }

    #[test]
    fn scaled_functions_survive_large_arguments() {
        let mut buf = vec![0.0; 2001];
        laguerre_functions(0, 3000.0, &mut buf);
        assert!(buf.iter().all(|v| v.is_finite() && v.abs() <= 1.0 + 1e-12));
        assert!(buf[1500].abs() > 0.0);
    }

    #[test]
    fn bessel_values() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(1, 0.0), 0.0);
        assert!(bessel_j(0, 2.404825557695773).abs() < 1e-8);
        // continuity across the series/recurrence switch
        for nu in 0..4 {
            let a = bessel_series(nu, 12.0);
            let b = bessel_miller(nu, 12.0);
            assert!((a - b).abs() < 1e-11, "nu={nu}");
        }
        // J_0(30) reference value
        assert!((bessel_j(0, 30.0) - (-0.086367983581040)).abs() < 1e-12);
        assert!((bessel_j(1, 50.0) - (-0.097511828125175)).abs() < 1e-12);
    }

    #[test]
    fn phi_at_origin_and_zero_lambda() {
        let o = GroupPoint::identity(2);
        assert_eq!(phi(1.3, 4, 2, &o).unwrap(), Complex64::new(1.0, 0.0));
        assert!(phi(0.0, 1, 2, &o).is_err());
    }

    #[test]
    fn eta_limits() {
        for n in 1..4 {
            let p = GroupPoint::new(vec![0.0; n], vec![0.0; n], 5.0).unwrap();
            assert_eq!(eta(3.0, n, &p).unwrap(), 1.0);
            let q = GroupPoint::new(vec![0.7; n], vec![-0.2; n], 1.0).unwrap();
            assert_eq!(eta(0.0, n, &q).unwrap(), 1.0);
            let a = eta_radial(n, 11.999999);
            let b = eta_radial(n, 12.000001);
            assert!((a - b).abs() < 1e-6);
        }
        // n = 1: η = J_0
        assert!((eta_radial(1, 20.0) - bessel_j(0, 20.0)).abs() < 1e-15);
    }
}
