//! Least-squares fits used by the decay and convergence studies.

use crate::error::{Error, Result};

/// Least-squares line y = a + b x; returns (b, a).
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::param("fit", "need at least two paired samples"));
    }
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::param("fit", "abscissae are all equal"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Slope of log y against log x. Nonpositive entries are rejected.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::param("fit", "log-log fit needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(fit_line(&lx, &ly)?.0)
}

/// Geometric ladder of `count` points from a to b inclusive.
pub fn geometric_ladder(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    let r = (b / a).ln() / (count - 1) as f64;
    (0..count).map(|i| a * (r * i as f64).exp()).collect()
}

/// True when every entry is strictly below its predecessor.
pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let x = geometric_ladder(10.0, 100.0, 6);
        let y: Vec<f64> = x.iter().map(|t| 3.0 * t.powf(-2.0)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 2.0).abs() < 1e-12);
        assert!((x[5] - 100.0).abs() < 1e-12);
        assert!(loglog_slope(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
