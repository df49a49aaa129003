//! Ridders' extrapolated central differences.

use crate::error::{Error, Result};

const SHRINK: f64 = 1.4;
const TABLE: usize = 10;
const SAFE: f64 = 2.0;

/// Derivative of `f` at `x` together with an error estimate.
///
/// Central differences with steps `h0, h0/1.4, ...` are extrapolated to zero
/// step with a Neville tableau. `f` must be defined on `[x - h0, x + h0]`.
pub fn ridders<F>(f: F, x: f64, h0: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(h0 > 0.0) || !h0.is_finite() {
        return Err(Error::Domain(format!("ridders: bad initial step {h0}")));
    }
    let mut tab = [[0.0_f64; TABLE]; TABLE];
    let mut h = h0;
    tab[0][0] = (f(x + h)? - f(x - h)?) / (2.0 * h);
    let mut best = tab[0][0];
    let mut err = f64::INFINITY;
    for i in 1..TABLE {
        h /= SHRINK;
        tab[0][i] = (f(x + h)? - f(x - h)?) / (2.0 * h);
        let mut fac = SHRINK * SHRINK;
        for j in 1..=i {
            tab[j][i] = (tab[j - 1][i] * fac - tab[j - 1][i - 1]) / (fac - 1.0);
            fac *= SHRINK * SHRINK;
            let errt = (tab[j][i] - tab[j - 1][i])
                .abs()
                .max((tab[j][i] - tab[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                best = tab[j][i];
            }
        }
        if (tab[i][i] - tab[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    Ok((best, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_derivative() {
        let (d, err) = ridders(|x: f64| Ok(x.exp()), 1.0, 0.1).unwrap();
        assert!((d - 1.0_f64.exp()).abs() < 1e-11, "{d}");
        assert!(err < 1e-9);
    }

    #[test]
    fn pole_near_boundary() {
        // -ln(1 - x) at x = 0.999, step limited by the distance to the pole.
        let x = 0.999;
        let (d, _) = ridders(|p: f64| Ok(-(1.0 - p).ln()), x, 0.25 * (1.0 - x)).unwrap();
        assert!((d / 1000.0 - 1.0).abs() < 1e-10, "{d}");
    }

    #[test]
    fn rejects_bad_step() {
        assert!(ridders(|x: f64| Ok(x), 0.0, 0.0).is_err());
    }
}
