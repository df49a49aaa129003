//! Generic engine turning log-MGF explosion data into tail statements.
//!
//! Everything here works against the [`MgfModel`] contract: a critical
//! moment `mu*`, the log-MGF `Λ` on `[0, mu*)`, and optionally the index of
//! regular variation of `x ↦ Λ(mu* − 1/x)`. From these we build the
//! Fenchel–Legendre transform `Λ*`, the Chernoff bound `exp(−Λ*(R))`, the
//! band in which `(ln P(Z > R) + Λ*(R)) / ln R` must have its limsup, and
//! the window integral that controls the lower bound.

use crate::error::{Error, Result};
use crate::numeric::diff::ridders;
use crate::numeric::quadrature::{self, QuadratureOptions};
use crate::numeric::regression::{geometric_grid, log_log_slope};

/// A random variable described by its log moment generating function near
/// the critical moment.
///
/// Implementations must have `log_mgf(0) == 0`, be convex and nondecreasing
/// on `[0, mu*)`, and blow up as `p` approaches `mu*`.
pub trait MgfModel: Send + Sync {
    /// Critical moment `mu* = sup{p : E e^{pZ} < ∞}`.
    fn critical_moment(&self) -> f64;

    /// `Λ` is finite on `(−lower_moment, mu*)`; infinite when `Z` is
    /// bounded below.
    fn lower_moment(&self) -> f64 {
        f64::INFINITY
    }

    /// `Λ(p) = ln E e^{pZ}`.
    fn log_mgf(&self, p: f64) -> Result<f64>;

    /// Regular-variation index of `x ↦ Λ(mu* − 1/x)`, when known analytically.
    fn alpha(&self) -> Option<f64>;

    /// `Λ'(0)`, when known analytically.
    fn mean(&self) -> Option<f64>;

    /// `Λ'(p)`. The default extrapolates central differences with a step
    /// bounded by the distance to both ends of the domain.
    fn log_mgf_derivative(&self, p: f64) -> Result<f64> {
        numeric_derivative(self, p)
    }
}

/// Ridders-extrapolated central difference of `Λ` at `p`.
pub fn numeric_derivative<M: MgfModel + ?Sized>(model: &M, p: f64) -> Result<f64> {
    let mu = model.critical_moment();
    let left = p + model.lower_moment().min(mu);
    let h0 = 0.25 * (mu - p).min(left);
    if !(h0 > 0.0) {
        return Err(Error::Domain(format!(
            "derivative at p = {p} outside the open domain (-{}, {mu})",
            model.lower_moment()
        )));
    }
    ridders(|q| model.log_mgf(q), p, h0).map(|(d, _)| d)
}

/// `Λ'(0)`: the declared mean, or a numeric derivative at zero.
pub fn model_mean<M: MgfModel + ?Sized>(model: &M) -> Result<f64> {
    match model.mean() {
        Some(m) => Ok(m),
        None => model.log_mgf_derivative(0.0),
    }
}

/// A point of the Fenchel–Legendre transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendrePoint {
    /// Tail level.
    pub r: f64,
    /// Maximizer `p*(R)`, the solution of `Λ'(p) = R`.
    pub p_star: f64,
    /// `Λ*(R) = p* R − Λ(p*)`.
    pub lambda_star: f64,
}

/// The asymptotic band for the log-tail at level `R`.
///
/// The band constrains `limsup (ln P(Z > R) + Λ*(R)) / ln R` as `R → ∞`; it
/// is not a bound on the tail at any single finite `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBand {
    pub r: f64,
    /// `−Λ*(R)`, the log of the Chernoff bound.
    pub log_upper: f64,
    /// `[−(α+2)/(2(α+1)), 0]`.
    pub exponent_interval: (f64, f64),
    /// `−Λ*(R) + exponent_interval.0 * ln R`.
    pub log_lower_limsup: f64,
}

/// `φ(x) = Λ(mu* − 1/x)`.
pub fn phi_shifted<M: MgfModel + ?Sized>(model: &M, x: f64) -> Result<f64> {
    let mu = model.critical_moment();
    if !(x > 1.0 / mu) {
        return Err(Error::Domain(format!(
            "phi_shifted needs x > 1/mu* = {}, got {x}",
            1.0 / mu
        )));
    }
    model.log_mgf(mu - 1.0 / x)
}

const BRACKET_RIGHT: f64 = 1e-12;
const BRACKET_WIDTH: f64 = 1e-13;
const MAX_BISECTIONS: usize = 200;
const NEWTON_POLISH: usize = 3;

/// Solves `Λ'(p) = R` on `(0, mu*)` and returns the Legendre point.
///
/// Bisection on `[0, mu*(1 − 10⁻¹²)]` down to a bracket of width
/// `10⁻¹³ mu*`, then a few guarded Newton steps. `Λ` is never evaluated at
/// or beyond `mu*`.
pub fn legendre<M: MgfModel + ?Sized>(model: &M, r: f64) -> Result<LegendrePoint> {
    let mean = model_mean(model)?;
    if !(r > mean) {
        return Err(Error::BelowMean { r, mean });
    }
    let mu = model.critical_moment();
    let mut lo = 0.0;
    let mut hi = mu * (1.0 - BRACKET_RIGHT);
    // An evaluation failure this close to mu* means the derivative is huge.
    let right = model.log_mgf_derivative(hi).unwrap_or(f64::INFINITY);
    if right < r {
        return Err(Error::NoConvergence(format!(
            "Λ' reaches only {right:e} < R = {r} at the right end of the bracket"
        )));
    }
    let mut iterations = 0;
    while hi - lo > BRACKET_WIDTH * mu {
        iterations += 1;
        if iterations > MAX_BISECTIONS {
            return Err(Error::NoConvergence("bisection iteration cap".into()));
        }
        let mid = 0.5 * (lo + hi);
        if model.log_mgf_derivative(mid)? < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut p = 0.5 * (lo + hi);
    let mut resid = model.log_mgf_derivative(p)? - r;
    for _ in 0..NEWTON_POLISH {
        let delta = 1e-4 * (mu - p).min(p);
        if !(delta > 0.0) || resid == 0.0 {
            break;
        }
        let curvature = (model.log_mgf_derivative(p + delta)?
            - model.log_mgf_derivative(p - delta)?)
            / (2.0 * delta);
        if !(curvature > 0.0) {
            break;
        }
        let candidate = p - resid / curvature;
        if !(candidate >= lo && candidate <= hi) {
            break;
        }
        let cand_resid = model.log_mgf_derivative(candidate)? - r;
        if cand_resid.abs() >= resid.abs() {
            break;
        }
        p = candidate;
        resid = cand_resid;
    }
    let lambda_star = p * r - model.log_mgf(p)?;
    Ok(LegendrePoint {
        r,
        p_star: p,
        lambda_star,
    })
}

/// Chernoff bound `P(Z > R) ≤ exp(−Λ*(R))`.
pub fn chernoff_upper<M: MgfModel + ?Sized>(model: &M, r: f64) -> Result<f64> {
    Ok((-legendre(model, r)?.lambda_star).exp())
}

/// Lower endpoint `−(α+2)/(2(α+1))` of the limsup band.
pub fn band_exponent(alpha: f64) -> f64 {
    -(alpha + 2.0) / (2.0 * (alpha + 1.0))
}

pub fn tail_band<M: MgfModel + ?Sized>(model: &M, r: f64) -> Result<TailBand> {
    let alpha = model.alpha().ok_or(Error::AlphaUnknown)?;
    let point = legendre(model, r)?;
    let lower = band_exponent(alpha);
    Ok(TailBand {
        r,
        log_upper: -point.lambda_star,
        exponent_interval: (lower, 0.0),
        log_lower_limsup: -point.lambda_star + lower * r.ln(),
    })
}

/// The exponent `ψ_R(z)` of the window integrand, with `p*(R)` cached.
///
/// `ψ_R(z) = (p*(R) − p*(Rz)) R z + Λ(p*(Rz)) − Λ(p*(R))`; it vanishes at
/// `z = 1` and is negative elsewhere.
pub struct WindowExponent<'a, M: MgfModel + ?Sized> {
    model: &'a M,
    r: f64,
    p_r: f64,
    log_mgf_r: f64,
}

impl<'a, M: MgfModel + ?Sized> WindowExponent<'a, M> {
    pub fn new(model: &'a M, r: f64) -> Result<Self> {
        let point = legendre(model, r)?;
        Ok(Self {
            model,
            r,
            p_r: point.p_star,
            log_mgf_r: model.log_mgf(point.p_star)?,
        })
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) {
            return Err(Error::Domain(format!("psi_R needs z > 0, got {z}")));
        }
        if z == 1.0 {
            return Ok(0.0);
        }
        let rz = self.r * z;
        let p_rz = legendre(self.model, rz)?.p_star;
        Ok((self.p_r - p_rz) * rz + self.model.log_mgf(p_rz)? - self.log_mgf_r)
    }
}

/// `ψ_R(z)`; both `R` and `Rz` must exceed the mean.
pub fn psi_r<M: MgfModel + ?Sized>(model: &M, r: f64, z: f64) -> Result<f64> {
    WindowExponent::new(model, r)?.eval(z)
}

/// Integrand values below this fraction of the `z = 1` peak are dropped
/// from the right-hand tail of the window integral.
const TAIL_CUTOFF: f64 = 1e-16;

/// `∫_{R^{β−1}}^∞ z^γ exp(ψ_R(z)) dz`, split at the peak `z = 1`.
///
/// The right half is truncated at the first power of two where the
/// integrand falls below `10⁻¹⁶` of its value at `z = 1`.
pub fn laplace_window_integral<M: MgfModel + ?Sized>(
    model: &M,
    r: f64,
    gamma: f64,
    beta: f64,
) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    let window = WindowExponent::new(model, r)?;
    let integrand = |z: f64| -> Result<f64> { Ok(z.powf(gamma) * window.eval(z)?.exp()) };
    let opts = QuadratureOptions::default();

    let lower = r.powf(beta - 1.0);
    let left = quadrature::integrate(integrand, lower, 1.0, opts)?;

    let peak = integrand(1.0)?;
    let mut upper = 2.0;
    while integrand(upper)? >= TAIL_CUTOFF * peak {
        upper *= 2.0;
        if upper > 1e18 {
            return Err(Error::QuadratureFailure {
                intervals: 0,
                error: f64::INFINITY,
            });
        }
    }
    let right = quadrature::integrate(integrand, 1.0, upper, opts)?;
    Ok(left.value + right.value)
}

/// Relative step used for the finite differences of `p*`.
const PSTAR_STEP: f64 = 0.02;
const GRID_PER_DECADE: usize = 5;

/// Regular-variation indices of `1/(p*)'` and `1/|(p*)''|`, estimated by
/// log-log least squares over a geometric grid on `[r_lo, r_hi]`.
///
/// Under the standing assumption these are `(α+2)/(α+1)` and
/// `(3+2α)/(α+1)`.
pub fn pstar_derivative_indices<M: MgfModel + ?Sized>(
    model: &M,
    r_lo: f64,
    r_hi: f64,
) -> Result<(f64, f64)> {
    if !(r_lo > 0.0) || !(r_hi >= 10.0 * r_lo) {
        let decades = if r_lo > 0.0 && r_hi > 0.0 { (r_hi / r_lo).log10() } else { 0.0 };
        return Err(Error::InsufficientSpan { decades });
    }
    let mut first = Vec::new();
    let mut second = Vec::new();
    for r in geometric_grid(r_lo, r_hi, GRID_PER_DECADE) {
        let (r_minus, r_plus) = (r * (-PSTAR_STEP).exp(), r * PSTAR_STEP.exp());
        let p_minus = legendre(model, r_minus)?.p_star;
        let p_mid = legendre(model, r)?.p_star;
        let p_plus = legendre(model, r_plus)?.p_star;
        let (h1, h2) = (r - r_minus, r_plus - r);
        let denom = h1 * h2 * (h1 + h2);
        let d1 = (p_plus * h1 * h1 - p_minus * h2 * h2 - p_mid * (h1 * h1 - h2 * h2)) / denom;
        let d2 = 2.0 * (p_plus * h1 - p_mid * (h1 + h2) + p_minus * h2) / denom;
        first.push((r, 1.0 / d1));
        second.push((r, 1.0 / d2.abs()));
    }
    Ok((log_log_slope(&first)?, log_log_slope(&second)?))
}

/// Least-squares index of regular variation from `(x, f(x))` samples.
///
/// A diagnostic: models declare `α` when they know it.
pub fn rv_index_estimate(samples: &[(f64, f64)]) -> Result<f64> {
    log_log_slope(samples)
}
