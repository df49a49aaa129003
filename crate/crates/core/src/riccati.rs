//! Closed-form Riccati solutions for the CIR process and its time integral.
//!
//! For `dV = (a − bV)dt + σ√V dW` and `I_t = ∫₀ᵗ V`, the joint transform is
//! `E exp(λ₁V_t + λ₂I_t) = exp(aφ(t) + vψ(t))` where `ψ` solves
//!
//! ```text
//! ψ' = (σ²/2) ψ² − b ψ + λ₂,   ψ(0) = λ₁
//! ```
//!
//! and `φ = ∫₀ᵗ ψ`. Writing `x = λ₁ − b/σ²`, the solution splits on the sign
//! of `2λ₂σ² − b²` into the four branches of [`RiccatiTag`]. The hyperbolic
//! forms below are the `C e^{ασ²t}` expressions rewritten through
//! `y = ln C + ασ²t`, which keeps them finite for large `t` and at the
//! stationary points `x = ±α`.
//!
//! [`ode_reference`] integrates the same equation numerically and is kept
//! independent of the closed forms so that each can check the other.

use std::f64::consts::LN_2;

use crate::error::{check_finite, check_nonnegative, check_positive, Error, Result};
use crate::numeric::ode::Dopri5;

/// Parameters `(a, b, σ, v)` of `dV = (a − bV)dt + σ√V dW`, `V₀ = v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    a: f64,
    b: f64,
    sigma: f64,
    v: f64,
}

impl CirParams {
    pub fn new(a: f64, b: f64, sigma: f64, v: f64) -> Result<Self> {
        Ok(Self {
            a: check_nonnegative("a", a)?,
            b: check_finite("b", b)?,
            sigma: check_positive("sigma", sigma)?,
            v: check_nonnegative("v", v)?,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn v(&self) -> f64 {
        self.v
    }

    /// `ν = 2a/σ²`.
    pub fn nu(&self) -> f64 {
        2.0 * self.a / (self.sigma * self.sigma)
    }

    /// Same process with a different reversion rate.
    pub fn with_b(&self, b: f64) -> Result<Self> {
        Self::new(self.a, b, self.sigma, self.v)
    }

    /// `E[V_t] = v e^{−bt} + (a/b)(1 − e^{−bt})`.
    pub fn mean_v(&self, t: f64) -> f64 {
        self.v * (-self.b * t).exp() + self.a * decay_integral(self.b, t)
    }

    /// `E[I_t] = ∫₀ᵗ E[V_s] ds`.
    pub fn mean_i(&self, t: f64) -> f64 {
        let h = decay_integral(self.b, t);
        let bt = self.b * t;
        // (t − h)/b, which tends to t²/2 as b → 0.
        let tail = if bt.abs() < 1e-2 {
            t * t * (0.5 - bt / 6.0 + bt * bt / 24.0 - bt * bt * bt / 120.0)
        } else {
            (t - h) / self.b
        };
        self.v * h + self.a * tail
    }

    /// `Var[V_t] = vσ²(e^{−bt} − e^{−2bt})/b + aσ²(1 − e^{−bt})²/(2b²)`.
    pub fn var_v(&self, t: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let h = decay_integral(self.b, t);
        self.v * s2 * (-self.b * t).exp() * h + 0.5 * self.a * s2 * h * h
    }
}

/// `(1 − e^{−bt})/b`, continuous at `b = 0`.
pub(crate) fn decay_integral(b: f64, t: f64) -> f64 {
    let bt = b * t;
    if bt.abs() < 1e-8 {
        t * (1.0 - 0.5 * bt)
    } else {
        -(-bt).exp_m1() / b
    }
}

/// Branch of the Riccati solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RiccatiTag {
    /// `2λ₂σ² < b²` and `|λ₁ − b/σ²| > α`.
    SubcriticalOutside,
    /// `2λ₂σ² < b²` and `|λ₁ − b/σ²| ≤ α`; never explodes.
    SubcriticalInside,
    /// `2λ₂σ² = b²` within the classification tolerance.
    Critical,
    /// `2λ₂σ² > b²`; always explodes.
    Supercritical,
}

impl std::fmt::Display for RiccatiTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RiccatiTag::SubcriticalOutside => "subcritical-outside",
            RiccatiTag::SubcriticalInside => "subcritical-inside",
            RiccatiTag::Critical => "critical",
            RiccatiTag::Supercritical => "supercritical",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiCase {
    pub tag: RiccatiTag,
    /// `α = √(b² − 2λ₂σ²)/σ²` (subcritical), `β = √(2λ₂σ² − b²)/σ²`
    /// (supercritical), zero when critical.
    pub alpha_or_beta: f64,
    /// `C = |(x − α)/(x + α)|` in the subcritical branches; may be `0` or
    /// `+∞` at the stationary points.
    pub c: Option<f64>,
}

/// `ψ(t)`, `φ(t)`, the explosion time and the branch for one `(λ₁, λ₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiEval {
    pub psi: f64,
    pub phi: f64,
    pub t_star: f64,
    pub case: RiccatiCase,
}

const CRITICAL_TOL: f64 = 1e-12;
const CONDITIONING_TOL: f64 = 1e-8;
const STATIONARY_ULPS: f64 = 4.0;

#[derive(Debug, Clone, Copy)]
enum Branch {
    /// `ψ = b/σ² − α coth(y/2)`, `y = y0 + ασ²t`.
    Outside { alpha: f64, y0: f64 },
    /// `ψ = b/σ² − α tanh(y/2)`; `y0 = ±∞` at the stationary points.
    Inside { alpha: f64, y0: f64 },
    /// `ψ = b/σ² + x/(1 − σ²xt/2)`.
    Critical,
    /// `ψ = b/σ² + β cot θ`, `θ = θ0 − βσ²t/2`.
    Super { beta: f64, theta0: f64 },
}

/// Solution of the Riccati equation for fixed `(b, σ, λ₁, λ₂)`.
#[derive(Debug, Clone, Copy)]
struct Solution {
    l1: f64,
    bs: f64,
    s2: f64,
    x: f64,
    branch: Branch,
    t_star: f64,
}

impl Solution {
    fn new(params: &CirParams, l1: f64, l2: f64) -> Self {
        let s2 = params.sigma * params.sigma;
        let b = params.b;
        let bs = b / s2;
        let x = l1 - bs;
        let disc = 2.0 * l2 * s2 - b * b;
        let scale = (b * b).max(1.0);
        if disc.abs() <= CRITICAL_TOL * scale {
            let t_star = if x > 0.0 { 2.0 / (s2 * x) } else { f64::INFINITY };
            return Self { l1, bs, s2, x, branch: Branch::Critical, t_star };
        }
        if disc.abs() <= CONDITIONING_TOL * scale {
            log::warn!(
                "Riccati classification is ill-conditioned: 2λ₂σ² − b² = {disc:e} (λ₁ = {l1}, λ₂ = {l2})"
            );
        }
        if disc > 0.0 {
            let beta = disc.sqrt() / s2;
            let theta0 = beta.atan2(x);
            let t_star = 2.0 * theta0 / (beta * s2);
            return Self { l1, bs, s2, x, branch: Branch::Super { beta, theta0 }, t_star };
        }
        let alpha = (-disc).sqrt() / s2;
        // Within rounding of a stationary point: hold it exactly.
        let snap = STATIONARY_ULPS * f64::EPSILON * l1.abs().max(bs.abs()).max(alpha);
        if (x.abs() - alpha).abs() <= snap {
            let y0 = if x > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
            return Self { l1, bs, s2, x, branch: Branch::Inside { alpha, y0 }, t_star: f64::INFINITY };
        }
        if x.abs() > alpha {
            // C = (x − α)/(x + α) is in (0, 1) for x > α and in (1, ∞) for x < −α.
            let (y0, t_star) = if x > alpha {
                let gap = (2.0 * alpha / (x - alpha)).ln_1p();
                (-gap, gap / (alpha * s2))
            } else {
                ((2.0 * alpha / (-x - alpha)).ln_1p(), f64::INFINITY)
            };
            Self { l1, bs, s2, x, branch: Branch::Outside { alpha, y0 }, t_star }
        } else {
            let y0 = if x.abs() < 0.5 * alpha {
                (-2.0 * x / (alpha + x)).ln_1p()
            } else {
                (alpha - x).ln() - (alpha + x).ln()
            };
            Self { l1, bs, s2, x, branch: Branch::Inside { alpha, y0 }, t_star: f64::INFINITY }
        }
    }

    fn case(&self) -> RiccatiCase {
        match self.branch {
            Branch::Outside { alpha, y0 } => RiccatiCase {
                tag: RiccatiTag::SubcriticalOutside,
                alpha_or_beta: alpha,
                c: Some(y0.exp()),
            },
            Branch::Inside { alpha, y0 } => RiccatiCase {
                tag: RiccatiTag::SubcriticalInside,
                alpha_or_beta: alpha,
                c: Some(y0.exp()),
            },
            Branch::Critical => RiccatiCase {
                tag: RiccatiTag::Critical,
                alpha_or_beta: 0.0,
                c: None,
            },
            Branch::Super { beta, .. } => RiccatiCase {
                tag: RiccatiTag::Supercritical,
                alpha_or_beta: beta,
                c: None,
            },
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("time must be finite and nonnegative, got {t}")));
        }
        if t >= self.t_star {
            return Err(Error::MomentExploded { t, t_star: self.t_star });
        }
        Ok(())
    }

    fn psi(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if t == 0.0 {
            return Ok(self.l1);
        }
        let value = match self.branch {
            Branch::Outside { alpha, y0 } => {
                let y = y0 + alpha * self.s2 * t;
                self.bs - alpha / (0.5 * y).tanh()
            }
            Branch::Inside { alpha, y0 } => {
                if y0.is_infinite() {
                    self.l1
                } else {
                    self.bs - alpha * (0.5 * (y0 + alpha * self.s2 * t)).tanh()
                }
            }
            Branch::Critical => self.bs + self.x / (1.0 - 0.5 * self.s2 * self.x * t),
            Branch::Super { beta, theta0 } => {
                let theta = theta0 - 0.5 * beta * self.s2 * t;
                self.bs + beta / theta.tan()
            }
        };
        Ok(value)
    }

    fn phi(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let drift = self.bs * t;
        let k = 2.0 / self.s2;
        let value = match self.branch {
            Branch::Outside { alpha, y0 } => {
                let y = y0 + alpha * self.s2 * t;
                drift - k * (ln_sinh(0.5 * y.abs()) - ln_sinh(0.5 * y0.abs()))
            }
            Branch::Inside { alpha, y0 } => {
                if y0.is_infinite() {
                    self.l1 * t
                } else {
                    let y = y0 + alpha * self.s2 * t;
                    drift - k * (ln_cosh(0.5 * y) - ln_cosh(0.5 * y0))
                }
            }
            Branch::Critical => drift - k * (-0.5 * self.s2 * self.x * t).ln_1p(),
            Branch::Super { beta, theta0 } => {
                let theta = theta0 - 0.5 * beta * self.s2 * t;
                assert!(theta > 0.0, "cos g must stay positive below t*");
                drift + k * (theta0.sin().ln() - theta.sin().ln())
            }
        };
        Ok(value)
    }
}

/// `ln sinh(u)` for `u > 0`.
fn ln_sinh(u: f64) -> f64 {
    u + (-(-2.0 * u).exp_m1()).ln() - LN_2
}

/// `ln cosh(u)`.
fn ln_cosh(u: f64) -> f64 {
    let u = u.abs();
    u + (-2.0 * u).exp().ln_1p() - LN_2
}

/// Branch tag and constants for `(λ₁, λ₂)`.
///
/// `2λ₂σ² − b²` within `10⁻¹² max(1, b²)` of zero counts as critical; within
/// `10⁻⁸` a conditioning warning is logged.
pub fn classify(params: &CirParams, l1: f64, l2: f64) -> RiccatiCase {
    Solution::new(params, l1, l2).case()
}

/// `ψ_{λ₁,λ₂}(t)`; fails with `MomentExploded` when `t ≥ t*`.
pub fn psi(params: &CirParams, l1: f64, l2: f64, t: f64) -> Result<f64> {
    Solution::new(params, l1, l2).psi(t)
}

/// `φ_{λ₁,λ₂}(t) = ∫₀ᵗ ψ`; fails with `MomentExploded` when `t ≥ t*`.
pub fn phi(params: &CirParams, l1: f64, l2: f64, t: f64) -> Result<f64> {
    Solution::new(params, l1, l2).phi(t)
}

/// Explosion time `t*_{λ₁,λ₂}`, `+∞` when `ψ` stays finite.
pub fn t_star(params: &CirParams, l1: f64, l2: f64) -> f64 {
    Solution::new(params, l1, l2).t_star
}

/// `ln E exp(λ₁V_t + λ₂I_t) = aφ(t) + vψ(t)`.
///
/// ```
/// use tailwedge::riccati::{log_mgf, CirParams};
/// let p = CirParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
/// assert_eq!(log_mgf(&p, 0.0, 0.0, 2.0).unwrap(), 0.0);
/// assert!(log_mgf(&p, 5.0, 5.0, 10.0).is_err()); // beyond t*
/// ```
pub fn log_mgf(params: &CirParams, l1: f64, l2: f64, t: f64) -> Result<f64> {
    let sol = Solution::new(params, l1, l2);
    let phi = if params.a == 0.0 { 0.0 } else { sol.phi(t)? };
    let psi = if params.v == 0.0 { 0.0 } else { sol.psi(t)? };
    // A vanishing coefficient must not hide an explosion.
    sol.check_time(t)?;
    Ok(params.a * phi + params.v * psi)
}

/// All closed-form quantities at once.
pub fn evaluate(params: &CirParams, l1: f64, l2: f64, t: f64) -> Result<RiccatiEval> {
    let sol = Solution::new(params, l1, l2);
    Ok(RiccatiEval {
        psi: sol.psi(t)?,
        phi: sol.phi(t)?,
        t_star: sol.t_star,
        case: sol.case(),
    })
}

/// Numerical trajectory of `(ψ, φ)` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    /// `(t, ψ(t), φ(t))` for every requested time reached before blow-up.
    pub points: Vec<(f64, f64, f64)>,
    /// Estimated explosion time, if `ψ` blew up inside the horizon.
    pub blowup: Option<f64>,
}

/// `ψ` above `BLOWUP_FACTOR · max(1, |λ₁|)` counts as exploded.
const BLOWUP_FACTOR: f64 = 1e12;
const UNDERFLOW_FACTOR: f64 = 1e-14;

#[derive(Clone, Copy)]
enum State {
    /// `(ψ, φ)`.
    Direct([f64; 2]),
    /// `(u, w) = (1/ψ, φ + (2/σ²) ln u)`; both stay smooth through blow-up.
    Reciprocal([f64; 2]),
}

/// Adaptive Dormand–Prince integration of `(ψ, φ)` through the requested
/// (ascending, nonnegative) `times`.
///
/// Once `ψ` is large enough that it can only increase, the integrator
/// switches to `u = 1/ψ` and `w = φ + (2/σ²) ln u`, which satisfy
///
/// ```text
/// u' = −(σ²/2 − b u + λ₂ u²),   w' = 2b/σ² − (2λ₂/σ²) u
/// ```
///
/// and cross the explosion smoothly. Blow-up is declared when `ψ` exceeds
/// `10¹² max(1, |λ₁|)`; the crossing time is located by secant iteration on
/// the step length.
pub fn ode_reference_grid(
    params: &CirParams,
    l1: f64,
    l2: f64,
    times: &[f64],
    tol: f64,
) -> Result<OdeTrajectory> {
    let s2 = params.sigma * params.sigma;
    let b = params.b;
    let direct = move |_: f64, y: &[f64; 2]| [0.5 * s2 * y[0] * y[0] - b * y[0] + l2, y[0]];
    let reciprocal = move |_: f64, y: &[f64; 2]| {
        let u = y[0];
        [-(0.5 * s2 - b * u + l2 * u * u), 2.0 * b / s2 - 2.0 * l2 * u / s2]
    };
    let solver = Dopri5::new(tol, tol);
    let switch_at = 1.0 + l1.abs() + 2.0 * b.abs() / s2 + (2.0 * l2.abs()).sqrt() / params.sigma;
    let u_blowup = 1.0 / (BLOWUP_FACTOR * l1.abs().max(1.0));
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let h_min = UNDERFLOW_FACTOR * horizon;

    let read = |state: &State| match *state {
        State::Direct([psi, phi]) => (psi, phi),
        State::Reciprocal([u, w]) => (1.0 / u, w - 2.0 / s2 * u.ln()),
    };

    let mut state = State::Direct([l1, 0.0]);
    let mut t = 0.0;
    let mut h = 1e-3 * horizon.min(1.0 / (1.0 + l1.abs() * s2 + b.abs() + l2.abs().sqrt()));
    let mut points = Vec::with_capacity(times.len());

    for &target in times {
        if !(target >= t) {
            return Err(Error::Domain(format!("ode times must be ascending, got {target} after {t}")));
        }
        while t < target {
            let step = h.min(target - t);
            if step < h_min && step < target - t {
                return Err(Error::StepUnderflow { t, h: step });
            }
            let (trial, err) = match state {
                State::Direct(y) => {
                    let s = solver.step(&direct, t, &y, step);
                    (State::Direct(s.y), s.error_norm)
                }
                State::Reciprocal(y) => {
                    let s = solver.step(&reciprocal, t, &y, step);
                    (State::Reciprocal(s.y), s.error_norm)
                }
            };
            h = solver.next_step(step, err);
            if err > 1.0 {
                continue;
            }
            match trial {
                State::Reciprocal(y) if y[0] < u_blowup => {
                    let State::Reciprocal(prev) = state else { unreachable!() };
                    let t_star = locate_blowup(&solver, &reciprocal, t, prev, step, u_blowup);
                    return Ok(OdeTrajectory { points, blowup: Some(t_star) });
                }
                State::Direct([psi, phi]) if psi > switch_at => {
                    let u = 1.0 / psi;
                    if u < u_blowup {
                        // Jumped past the threshold in one step; the remaining
                        // time to the pole is about 2/(σ²ψ).
                        return Ok(OdeTrajectory {
                            points,
                            blowup: Some(t + step + 2.0 / (s2 * psi)),
                        });
                    }
                    state = State::Reciprocal([u, phi + 2.0 / s2 * u.ln()]);
                }
                other => state = other,
            }
            t += step;
        }
        let (psi, phi) = read(&state);
        points.push((target, psi, phi));
    }
    Ok(OdeTrajectory { points, blowup: None })
}

/// Step length from `(t, y)` at which `u` reaches `level`, by secant
/// iteration safeguarded with bisection.
fn locate_blowup<F>(solver: &Dopri5, f: &F, t: f64, y: [f64; 2], h_max: f64, level: f64) -> f64
where
    F: Fn(f64, &[f64; 2]) -> [f64; 2],
{
    let g = |h: f64| solver.step(f, t, &y, h).y[0] - level;
    let (mut lo, mut hi) = (0.0, h_max);
    let (mut g_lo, mut g_hi) = (y[0] - level, g(h_max));
    let mut mid = hi;
    // Illinois variant: halve the stale end's value so both ends move.
    let mut last_side = 0i8;
    for _ in 0..200 {
        mid = lo - g_lo * (hi - lo) / (g_hi - g_lo);
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        let g_mid = g(mid);
        if g_mid.abs() <= 1e-6 * level || hi - lo <= 1e-15 * (t + hi) {
            break;
        }
        if g_mid > 0.0 {
            lo = mid;
            g_lo = g_mid;
            if last_side == 1 {
                g_hi *= 0.5;
            }
            last_side = 1;
        } else {
            hi = mid;
            g_hi = g_mid;
            if last_side == -1 {
                g_lo *= 0.5;
            }
            last_side = -1;
        }
    }
    t + mid
}

/// Numerical `(ψ(t), φ(t))` with per-step relative tolerance `tol`.
///
/// If `ψ` blows up before `t`, the returned `psi` and `phi` are `+∞` and
/// `t_star` carries the blow-up estimate; otherwise `t_star` is `+∞`
/// (no blow-up observed on `[0, t]`).
pub fn ode_reference(params: &CirParams, l1: f64, l2: f64, t: f64, tol: f64) -> Result<RiccatiEval> {
    let traj = ode_reference_grid(params, l1, l2, &[t], tol)?;
    let case = classify(params, l1, l2);
    Ok(match (traj.blowup, traj.points.first()) {
        (Some(t_star), _) => RiccatiEval {
            psi: f64::INFINITY,
            phi: f64::INFINITY,
            t_star,
            case,
        },
        (None, Some(&(_, psi, phi))) => RiccatiEval {
            psi,
            phi,
            t_star: f64::INFINITY,
            case,
        },
        (None, None) => unreachable!("one point requested"),
    })
}
