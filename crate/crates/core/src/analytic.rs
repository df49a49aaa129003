//! Closed-form models: Gamma (exact tails), variance-gamma, and the Heston
//! log-MGF reduced to a CIR transform.

use crate::error::{check_positive, Error, Result};
use crate::numeric::special::ln_upper_gamma_regularized;
use crate::riccati::{self, CirParams};
use crate::tauberian::MgfModel;

/// Gamma law with shape `k` and scale `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    k: f64,
    theta: f64,
}

impl GammaParams {
    pub fn new(k: f64, theta: f64) -> Result<Self> {
        Ok(Self {
            k: check_positive("k", k)?,
            theta: check_positive("theta", theta)?,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// `Λ(p) = −k ln(1 − θp)`, `mu* = 1/θ`, `α = 0`.
#[derive(Debug, Clone, Copy)]
pub struct GammaModel {
    params: GammaParams,
}

pub fn gamma_model(params: GammaParams) -> GammaModel {
    GammaModel { params }
}

impl GammaModel {
    pub fn params(&self) -> GammaParams {
        self.params
    }
}

impl MgfModel for GammaModel {
    fn critical_moment(&self) -> f64 {
        1.0 / self.params.theta
    }

    fn log_mgf(&self, p: f64) -> Result<f64> {
        let GammaParams { k, theta } = self.params;
        if !(p * theta < 1.0) {
            return Err(Error::Domain(format!("Gamma log-MGF needs p < 1/theta, got p = {p}")));
        }
        Ok(-k * (-theta * p).ln_1p())
    }

    fn log_mgf_derivative(&self, p: f64) -> Result<f64> {
        let GammaParams { k, theta } = self.params;
        if !(p * theta < 1.0) {
            return Err(Error::Domain(format!("Gamma log-MGF needs p < 1/theta, got p = {p}")));
        }
        Ok(k * theta / (1.0 - theta * p))
    }

    fn alpha(&self) -> Option<f64> {
        Some(0.0)
    }

    fn mean(&self) -> Option<f64> {
        Some(self.params.k * self.params.theta)
    }
}

/// Shapes up to this size take the exact Erlang sum.
const ERLANG_MAX_SHAPE: f64 = 1e6;

/// `ln P(Z > R)` for `Z ~ Gamma(k, θ)`.
///
/// Integer shapes use `e^{−x} Σ_{j<k} x^j/j!` with `x = R/θ`, summed in log
/// space; other shapes go through the regularized upper incomplete gamma.
///
/// ```
/// use tailwedge::analytic::{gamma_exact_log_sf, GammaParams};
/// let p = GammaParams::new(2.0, 1.0).unwrap();
/// let v = gamma_exact_log_sf(&p, 10.0).unwrap();
/// assert!((v - (11f64.ln() - 10.0)).abs() < 1e-14);
/// ```
pub fn gamma_exact_log_sf(params: &GammaParams, r: f64) -> Result<f64> {
    if r.is_nan() {
        return Err(Error::Domain("tail level is NaN".into()));
    }
    if r <= 0.0 {
        return Ok(0.0);
    }
    let x = r / params.theta;
    let k = params.k;
    if k.fract() == 0.0 && k <= ERLANG_MAX_SHAPE {
        let n = k as usize;
        let lx = x.ln();
        // Terms x^j/j! peak near j = x; log-sum-exp around the largest.
        let terms: Vec<f64> = (0..n)
            .scan(0.0, |acc, j| {
                if j > 0 {
                    *acc += lx - (j as f64).ln();
                }
                Some(*acc)
            })
            .collect();
        let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
        return Ok(-x + top + sum.ln());
    }
    ln_upper_gamma_regularized(k, x)
}

/// Variance-gamma increments with `MGF(p) = (gm/((m − p)(p + g)))^c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceGammaParams {
    c: f64,
    g: f64,
    m: f64,
}

impl VarianceGammaParams {
    pub fn new(c: f64, g: f64, m: f64) -> Result<Self> {
        Ok(Self {
            c: check_positive("c", c)?,
            g: check_positive("g", g)?,
            m: check_positive("m", m)?,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn m(&self) -> f64 {
        self.m
    }
}

/// Variance-gamma model, `mu* = m`, lower critical moment `g`.
///
/// The shifted log-MGF grows like `c ln x`, so the declared index is `0`.
/// That sits on the edge of the class the window-integral lemma covers; use
/// this model for band arithmetic only.
#[derive(Debug, Clone, Copy)]
pub struct VarianceGammaModel {
    params: VarianceGammaParams,
}

pub fn vg_model(params: VarianceGammaParams) -> VarianceGammaModel {
    VarianceGammaModel { params }
}

impl VarianceGammaModel {
    fn check(&self, p: f64) -> Result<()> {
        let VarianceGammaParams { g, m, .. } = self.params;
        if p > -g && p < m {
            Ok(())
        } else {
            Err(Error::Domain(format!("variance-gamma log-MGF needs -g < p < m, got p = {p}")))
        }
    }
}

impl MgfModel for VarianceGammaModel {
    fn critical_moment(&self) -> f64 {
        self.params.m
    }

    fn lower_moment(&self) -> f64 {
        self.params.g
    }

    fn log_mgf(&self, p: f64) -> Result<f64> {
        self.check(p)?;
        let VarianceGammaParams { c, g, m } = self.params;
        Ok(-c * ((-p / m).ln_1p() + (p / g).ln_1p()))
    }

    fn log_mgf_derivative(&self, p: f64) -> Result<f64> {
        self.check(p)?;
        let VarianceGammaParams { c, g, m } = self.params;
        Ok(c * (1.0 / (m - p) - 1.0 / (p + g)))
    }

    fn alpha(&self) -> Option<f64> {
        Some(0.0)
    }

    fn mean(&self) -> Option<f64> {
        let VarianceGammaParams { c, g, m } = self.params;
        Some(c * (1.0 / m - 1.0 / g))
    }
}

/// Heston variance process with price–variance correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonParams {
    cir: CirParams,
    rho: f64,
}

impl HestonParams {
    pub fn new(cir: CirParams, rho: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: rho,
                reason: "must lie in [-1, 1]",
            });
        }
        Ok(Self { cir, rho })
    }

    pub fn cir(&self) -> CirParams {
        self.cir
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// `ln E[S_t^p]` for the normalized Heston price.
///
/// Under the share measure shifted by `p`, the variance keeps its CIR form
/// with `b' = b − ρσp`, and the moment reduces to
/// `E exp(((p² − p)/2) I_t)`.
///
/// ```
/// use tailwedge::analytic::{heston_log_mgf, HestonParams};
/// use tailwedge::riccati::CirParams;
/// let h = HestonParams::new(CirParams::new(1.0, 1.0, 1.0, 1.0).unwrap(), -0.7).unwrap();
/// assert_eq!(heston_log_mgf(&h, 1.0, 2.0).unwrap(), 0.0);
/// ```
pub fn heston_log_mgf(params: &HestonParams, p: f64, t: f64) -> Result<f64> {
    let cir = params.cir;
    let shifted = cir.with_b(cir.b() - params.rho * cir.sigma() * p)?;
    riccati::log_mgf(&shifted, 0.0, 0.5 * (p * p - p), t)
}
