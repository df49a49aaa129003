//! Critical moments of `Z = λ₁V_t + λ₂I_t`, the pole coefficient `ω` of the
//! log-MGF at the critical moment, and the tail band that follows from it.
//!
//! `μ*₊(t)` is the smallest `μ > 0` whose explosion time
//! `t*(μλ₁, μλ₂)` has come down to `t`. Near it the log-MGF behaves like
//!
//! ```text
//! Λ(μ) = ω / (μ* − μ) + κ ln(1/(μ* − μ)) + O(1)
//! ```
//!
//! with `κ = 2a/σ²`, which makes `x ↦ Λ(μ* − 1/x)` regularly varying of
//! index one and gives `ln P(Z > R) ≈ −μ*R + 2√(ωR) + c ln R`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::riccati::{self, classify, t_star, CirParams, RiccatiTag};
use crate::tauberian::MgfModel;

/// Coefficients `(λ₁, λ₂)` and horizon `t` of `Z = λ₁V_t + λ₂I_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionSpec {
    l1: f64,
    l2: f64,
    t: f64,
}

impl SuperpositionSpec {
    pub fn new(l1: f64, l2: f64, t: f64) -> Result<Self> {
        Ok(Self {
            l1: crate::error::check_finite("l1", l1)?,
            l2: crate::error::check_finite("l2", l2)?,
            t: crate::error::check_positive("t", t)?,
        })
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }
    pub fn l2(&self) -> f64 {
        self.l2
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    /// The same horizon for `−Z`.
    pub fn negated(&self) -> Self {
        Self { l1: -self.l1, l2: -self.l2, t: self.t }
    }

    fn oriented(&self, side: Side) -> Self {
        match side {
            Side::Plus => *self,
            Side::Minus => self.negated(),
        }
    }
}

/// Which tail: `Plus` for `Z`, `Minus` for `−Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl std::str::FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "plus" => Ok(Side::Plus),
            "minus" => Ok(Side::Minus),
            _ => Err(format!("side must be `plus` or `minus`, got `{s}`")),
        }
    }
}

const SCAN_CAP: f64 = 1.152_921_504_606_847e18; // 2^60

/// `μ*₊(t)`: root of `μ ↦ t*(μλ₁, μλ₂) − t` by doubling and bisection.
///
/// Requires `max(λ₁, λ₂) > 0`; the explosion time is strictly decreasing in
/// `μ` where finite, so the root is unique.
///
/// ```
/// use tailwedge::critical::{mu_plus, SuperpositionSpec};
/// use tailwedge::riccati::CirParams;
/// let p = CirParams::new(1.0, 0.0, 1.0, 1.0).unwrap();
/// let s = SuperpositionSpec::new(0.0, 1.0, 1.0).unwrap();
/// let mu = mu_plus(&p, &s).unwrap();
/// assert!((mu / (std::f64::consts::PI.powi(2) / 2.0) - 1.0).abs() < 1e-12);
/// ```
pub fn mu_plus(params: &CirParams, spec: &SuperpositionSpec) -> Result<f64> {
    let (l1, l2, t) = (spec.l1, spec.l2, spec.t);
    if !(l1.max(l2) > 0.0) {
        return Err(Error::PreconditionViolated(format!(
            "right critical moment needs max(l1, l2) > 0, got ({l1}, {l2})"
        )));
    }
    let explodes_by_t = |mu: f64| t_star(params, mu * l1, mu * l2) <= t;

    let start = 1.0 / l1.abs().max(l2.abs());
    let (mut lo, mut hi);
    if explodes_by_t(start) {
        hi = start;
        lo = 0.5 * start;
        while explodes_by_t(lo) {
            hi = lo;
            lo *= 0.5;
            if lo < 1.0 / SCAN_CAP {
                return Err(Error::NoBracket);
            }
        }
    } else {
        lo = start;
        hi = 2.0 * start;
        while !explodes_by_t(hi) {
            lo = hi;
            hi *= 2.0;
            if hi > SCAN_CAP {
                return Err(Error::NoBracket);
            }
        }
    }
    for _ in 0..200 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if explodes_by_t(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mu = hi;
    check_slope(params, spec, mu);
    Ok(mu)
}

/// Logs a diagnostic if `t*` fails to decrease through the root.
fn check_slope(params: &CirParams, spec: &SuperpositionSpec, mu: f64) {
    let d = 1e-6 * mu;
    let before = t_star(params, (mu - d) * spec.l1, (mu - d) * spec.l2);
    let after = t_star(params, (mu + d) * spec.l1, (mu + d) * spec.l2);
    if !(before > spec.t && after < spec.t) {
        log::warn!(
            "explosion time is not decreasing through mu* = {mu}: t*(mu-) = {before}, t*(mu+) = {after}, t = {}",
            spec.t
        );
    }
}

/// `μ*₋(t) = μ*₊(t)` of `−Z`; requires `min(λ₁, λ₂) < 0`.
pub fn mu_minus(params: &CirParams, spec: &SuperpositionSpec) -> Result<f64> {
    if !(spec.l1.min(spec.l2) < 0.0) {
        return Err(Error::PreconditionViolated(format!(
            "left critical moment needs min(l1, l2) < 0, got ({}, {})",
            spec.l1, spec.l2
        )));
    }
    mu_plus(params, &spec.negated())
}

/// Critical moment on one side, `+∞` when that tail has all moments.
pub fn critical_moment(params: &CirParams, spec: &SuperpositionSpec, side: Side) -> Result<f64> {
    let s = spec.oriented(side);
    if s.l1.max(s.l2) > 0.0 {
        mu_plus(params, &s)
    } else {
        Ok(f64::INFINITY)
    }
}

/// `ω` from the analytic expansion at the critical moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedOmega {
    pub omega: f64,
    /// Coefficient of `ln(1/(μ* − μ))` obtained by expanding `aφ`: `+2a/σ²`.
    pub log_coeff: f64,
    /// The same coefficient with the sign `−2a/σ²` used in the theorem
    /// statement; kept for comparison, the fit supports `log_coeff`.
    pub stated_log_coeff: f64,
    pub tag: RiccatiTag,
}

/// `ω` and the log coefficient from the closed-form expansion of `ψ`.
///
/// Supercritical at `μ*`: `ω = v s / (σ² ∂_μ g)` with `s = √(2μλ₂σ² − b²)`
/// and `g` the angle that reaches zero at the explosion. Subcritical with
/// `|x| > α`: `ω = 2vα/c₁` where `c₁ = d/dμ [C e^{ασ²t}]` at `μ*`.
/// The pure critical family (`b = λ₂ = 0`) gives `ω = vλ₁μ*²`.
pub fn omega_closed(params: &CirParams, spec: &SuperpositionSpec, side: Side) -> Result<ClosedOmega> {
    let s = spec.oriented(side);
    let mu = critical_moment(params, spec, side)?;
    if !mu.is_finite() {
        return Err(Error::InfiniteCriticalMoment);
    }
    let (l1, l2, t) = (s.l1, s.l2, s.t);
    let (a, b, sigma, v) = (params.a(), params.b(), params.sigma(), params.v());
    let s2 = sigma * sigma;
    let case = classify(params, mu * l1, mu * l2);
    let omega = match case.tag {
        RiccatiTag::Supercritical => {
            let root = (2.0 * mu * l2 * s2 - b * b).sqrt();
            let n = mu * l1 * s2 - b;
            let d_root = l2 * s2 / root;
            let dg = 0.5 * d_root * t + (root * l1 * s2 - n * d_root) / (root * root + n * n);
            v * root / (s2 * dg)
        }
        RiccatiTag::SubcriticalOutside => {
            let alpha = case.alpha_or_beta;
            let x = mu * l1 - b / s2;
            let d_alpha = -l2 / (s2 * alpha);
            let d_ln_c = (l1 - d_alpha) / (x - alpha) - (l1 + d_alpha) / (x + alpha);
            let c1 = d_ln_c + s2 * t * d_alpha;
            2.0 * v * alpha / c1
        }
        RiccatiTag::Critical if l2 == 0.0 && b == 0.0 => v * l1 * mu * mu,
        tag => {
            return Err(Error::UnsupportedCase(format!(
                "no closed-form expansion at the critical moment in the {tag} case"
            )))
        }
    };
    let log_coeff = 2.0 * a / s2;
    Ok(ClosedOmega { omega, log_coeff, stated_log_coeff: -log_coeff, tag: case.tag })
}

/// Least-squares fit of `Λ(μ* − ε) ≈ ω/ε + κ ln(1/ε) + C + dε`.
///
/// The linear term soaks up the first correction; without it `κ` picks up
/// a bias of order `10⁻²` when `2a/σ²` is large.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaFit {
    pub omega: f64,
    pub log_coeff: f64,
    pub intercept: f64,
    /// Largest absolute residual over the `ε` grid.
    pub max_residual: f64,
    /// Condition number of the column-scaled design matrix.
    pub condition: f64,
}

const FIT_POINTS: usize = 9;
const FIT_MAX_CONDITION: f64 = 1e12;

/// Fits the pole expansion of `Λ` on `ε = μ*·10^{−2}, …, μ*·10^{−6}`.
pub fn omega_fit(params: &CirParams, spec: &SuperpositionSpec, side: Side) -> Result<OmegaFit> {
    let s = spec.oriented(side);
    let mu = critical_moment(params, spec, side)?;
    if !mu.is_finite() {
        return Err(Error::InfiniteCriticalMoment);
    }
    let mut design = DMatrix::zeros(FIT_POINTS, 4);
    let mut rhs = DVector::zeros(FIT_POINTS);
    for i in 0..FIT_POINTS {
        let eps = mu * 10f64.powf(-2.0 - 0.5 * i as f64);
        let m = mu - eps;
        rhs[i] = riccati::log_mgf(params, m * s.l1, m * s.l2, s.t)?;
        design[(i, 0)] = 1.0 / eps;
        design[(i, 1)] = (1.0 / eps).ln();
        design[(i, 2)] = 1.0;
        design[(i, 3)] = eps;
    }
    let scales: Vec<f64> = (0..4).map(|j| design.column(j).amax()).collect();
    let mut scaled = design.clone();
    for (j, sc) in scales.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*sc);
    }
    let svd = scaled.svd(true, true);
    let sv = &svd.singular_values;
    let condition = sv.max() / sv.min();
    if !(condition <= FIT_MAX_CONDITION) {
        return Err(Error::FitIllConditioned { cond: condition });
    }
    let coef = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::NoConvergence(format!("least squares: {e}")))?;
    let beta: Vec<f64> = coef.iter().zip(&scales).map(|(c, s)| c / s).collect();
    let resid = &rhs - &design * DVector::from_column_slice(&beta);
    Ok(OmegaFit {
        omega: beta[0],
        log_coeff: beta[1],
        intercept: beta[2],
        max_residual: resid.amax(),
        condition,
    })
}

/// Both tails at once; a side without a finite critical moment reports
/// `+∞` and no coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalMomentResult {
    pub mu_plus: f64,
    pub omega_plus: Option<f64>,
    pub log_coeff_plus: Option<f64>,
    pub mu_minus: f64,
    pub omega_minus: Option<f64>,
    pub log_coeff_minus: Option<f64>,
}

pub fn critical_moments(params: &CirParams, spec: &SuperpositionSpec) -> Result<CriticalMomentResult> {
    let side = |side| -> Result<(f64, Option<OmegaFit>)> {
        let mu = critical_moment(params, spec, side)?;
        let fit = if mu.is_finite() { Some(omega_fit(params, spec, side)?) } else { None };
        Ok((mu, fit))
    };
    let (mu_plus, fit_plus) = side(Side::Plus)?;
    let (mu_minus, fit_minus) = side(Side::Minus)?;
    Ok(CriticalMomentResult {
        mu_plus,
        omega_plus: fit_plus.map(|f| f.omega),
        log_coeff_plus: fit_plus.map(|f| f.log_coeff),
        mu_minus,
        omega_minus: fit_minus.map(|f| f.omega),
        log_coeff_minus: fit_minus.map(|f| f.log_coeff),
    })
}

/// Right-tail band for `Z`.
///
/// The statement is asymptotic: `ln P(Z > R) − center` divided by `ln R`
/// has its limsup in `c_interval`. Nothing is claimed at any finite `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorollaryBand {
    pub r: f64,
    /// `−μ*₊R + 2√(ω⁺R)`.
    pub center: f64,
    /// `[a/σ² − 3/4, a/σ²]`.
    pub c_interval: (f64, f64),
    pub mu_plus: f64,
    pub omega: f64,
    /// Always `true`: the band describes a limsup.
    pub asymptotic: bool,
}

pub fn corollary_band(params: &CirParams, spec: &SuperpositionSpec, r: f64) -> Result<CorollaryBand> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("tail level must be positive, got {r}")));
    }
    let mu = mu_plus(params, spec)?;
    let omega = omega_fit(params, spec, Side::Plus)?.omega;
    Ok(band_from(params, mu, omega, r))
}

/// Band arithmetic for an already computed `(μ*₊, ω⁺)`.
pub fn band_from(params: &CirParams, mu_plus: f64, omega: f64, r: f64) -> CorollaryBand {
    let top = params.a() / (params.sigma() * params.sigma());
    CorollaryBand {
        r,
        center: -mu_plus * r + 2.0 * (omega * r).sqrt(),
        c_interval: (top - 0.75, top),
        mu_plus,
        omega,
        asymptotic: true,
    }
}

/// `Z = λ₁V_t + λ₂I_t` as an [`MgfModel`].
#[derive(Debug, Clone, Copy)]
pub struct CirMgfModel {
    params: CirParams,
    spec: SuperpositionSpec,
    mu_plus: f64,
    mu_minus: f64,
}

/// Packages the CIR superposition for the generic engine.
///
/// The shifted log-MGF grows like `ωx`, so the declared index is `1` when
/// `v > 0`. With `v = 0` only the logarithmic `aφ` part remains and the
/// index is `0`.
pub fn cir_mgf_model(params: CirParams, spec: SuperpositionSpec) -> Result<CirMgfModel> {
    if params.a() == 0.0 && params.v() == 0.0 {
        return Err(Error::PreconditionViolated(
            "a = v = 0 makes the process identically zero".into(),
        ));
    }
    let mu_plus = mu_plus(&params, &spec)?;
    let mu_minus = critical_moment(&params, &spec, Side::Minus)?;
    Ok(CirMgfModel { params, spec, mu_plus, mu_minus })
}

impl CirMgfModel {
    pub fn params(&self) -> &CirParams {
        &self.params
    }

    pub fn spec(&self) -> &SuperpositionSpec {
        &self.spec
    }
}

impl MgfModel for CirMgfModel {
    fn critical_moment(&self) -> f64 {
        self.mu_plus
    }

    fn lower_moment(&self) -> f64 {
        self.mu_minus
    }

    fn log_mgf(&self, p: f64) -> Result<f64> {
        if !(p < self.mu_plus && -p < self.mu_minus) {
            return Err(Error::Domain(format!(
                "p = {p} lies outside (-{}, {})",
                self.mu_minus, self.mu_plus
            )));
        }
        riccati::log_mgf(&self.params, p * self.spec.l1, p * self.spec.l2, self.spec.t)
    }

    fn alpha(&self) -> Option<f64> {
        Some(if self.params.v() > 0.0 { 1.0 } else { 0.0 })
    }

    fn mean(&self) -> Option<f64> {
        let t = self.spec.t;
        Some(self.spec.l1 * self.params.mean_v(t) + self.spec.l2 * self.params.mean_i(t))
    }
}
