//! Least-squares slopes on log-log data.

use crate::error::{Error, Result};

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Slope of `ln f` against `ln x` for positive samples spanning at least one
/// decade in `x`.
pub fn log_log_slope(samples: &[(f64, f64)]) -> Result<f64> {
    if let Some(&(x, f)) = samples
        .iter()
        .find(|(x, f)| !(*x > 0.0 && *f > 0.0) || !x.is_finite() || !f.is_finite())
    {
        return Err(Error::NonpositiveSample { x, f });
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let decades = if samples.is_empty() { 0.0 } else { (hi / lo).log10() };
    if samples.len() < 2 || decades < 1.0 {
        return Err(Error::InsufficientSpan { decades });
    }
    let (lx, lf): (Vec<f64>, Vec<f64>) = samples.iter().map(|&(x, f)| (x.ln(), f.ln())).unzip();
    Ok(slope(&lx, &lf))
}

/// `n` points per decade, geometrically spaced from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).round() as usize).max(1);
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = geometric_grid(1e2, 1e4, 5);
        assert_eq!(g.len(), 11);
        assert!((g[0] - 1e2).abs() < 1e-12);
        assert!((g[10] / 1e4 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_short_span_and_bad_samples() {
        let short: Vec<_> = (1..5).map(|i| (i as f64, 1.0)).collect();
        assert!(matches!(log_log_slope(&short), Err(Error::InsufficientSpan { .. })));
        let bad = vec![(1.0, 1.0), (100.0, -2.0)];
        assert!(matches!(log_log_slope(&bad), Err(Error::NonpositiveSample { .. })));
    }
}
