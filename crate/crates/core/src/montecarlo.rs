//! Exact-transition simulation of `(V_t, I_t)` and the estimators built on
//! it.
//!
//! `V` is advanced with the noncentral chi-square transition law, so the
//! only discretization error is the trapezoid rule used for `I_t`. Every path
//! owns a ChaCha stream keyed by `(seed, path index)` and paths are reduced in
//! fixed-size blocks whose partial results are merged in block order, so the
//! output does not depend on how many threads ran it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::critical::{critical_moment, Side, SuperpositionSpec};
use crate::error::{Error, Result};
use crate::riccati::{decay_integral, CirParams};

pub const MIN_PATHS: u64 = 100;
pub const MIN_STEPS: usize = 8;
const BLOCK: u64 = 1024;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workers {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    n_paths: u64,
    n_steps: usize,
    seed: u64,
    workers: Workers,
}

impl McConfig {
    pub fn new(n_paths: u64, n_steps: usize, seed: u64, workers: Workers) -> Result<Self> {
        if n_paths < MIN_PATHS {
            return Err(Error::InvalidConfig(format!("n_paths = {n_paths} is below {MIN_PATHS}")));
        }
        if n_steps < MIN_STEPS {
            return Err(Error::InvalidConfig(format!("n_steps = {n_steps} is below {MIN_STEPS}")));
        }
        if workers == Workers::Fixed(0) {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        Ok(Self { n_paths, n_steps, seed, workers })
    }

    pub fn n_paths(&self) -> u64 {
        self.n_paths
    }
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn workers(&self) -> Workers {
        self.workers
    }

    pub fn with_workers(self, workers: Workers) -> Result<Self> {
        Self::new(self.n_paths, self.n_steps, self.seed, workers)
    }
}

/// Random stream of path `index`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `V_{s+dt}` given `V_s = v_from`.
///
/// `V_{s+dt} = c̄ X` with `c̄ = σ²(1 − e^{−b dt})/(4b)` and `X` noncentral
/// chi-square with `d = 4a/σ²` degrees of freedom and noncentrality
/// `v_from e^{−b dt}/c̄`.
pub fn sample_transition<R: Rng + ?Sized>(
    params: &CirParams,
    v_from: f64,
    dt: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidDt { dt });
    }
    let s2 = params.sigma() * params.sigma();
    let scale = 0.25 * s2 * decay_integral(params.b(), dt);
    let dof = 4.0 * params.a() / s2;
    let noncentrality = v_from * (-params.b() * dt).exp() / scale;
    Ok(scale * noncentral_chi_squared(dof, noncentrality, rng))
}

fn noncentral_chi_squared<R: Rng + ?Sized>(dof: f64, lambda: f64, rng: &mut R) -> f64 {
    if dof > 1.0 {
        let z: f64 = rng.sample(StandardNormal);
        let shifted = z + lambda.sqrt();
        let rest = ChiSquared::new(dof - 1.0).expect("dof > 1").sample(rng);
        return shifted * shifted + rest;
    }
    // Poisson mixture of central chi-squares.
    let n = if lambda > 0.0 {
        Poisson::new(0.5 * lambda).expect("positive mean").sample(rng)
    } else {
        0.0
    };
    let shape = 0.5 * dof + n;
    if shape == 0.0 {
        return 0.0;
    }
    2.0 * Gamma::new(shape, 1.0).expect("positive shape").sample(rng)
}

/// Terminal `(V_t, I_t)` of one path on a uniform grid of `n_steps`, with
/// `I_t` by the trapezoid rule.
pub fn simulate_path<R: Rng + ?Sized>(
    params: &CirParams,
    t: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let dt = t / n_steps as f64;
    let mut v = params.v();
    let mut area = 0.5 * v;
    for _ in 0..n_steps {
        v = sample_transition(params, v, dt, rng)?;
        area += v;
    }
    area -= 0.5 * v;
    Ok((v, area * dt))
}

/// Runs `per_path` over every path, block by block, and returns the block
/// results in block order.
fn run_blocks<A, F>(config: &McConfig, per_block: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(std::ops::Range<u64>) -> Result<A> + Sync,
{
    let blocks: Vec<std::ops::Range<u64>> = (0..config.n_paths.div_ceil(BLOCK))
        .map(|k| k * BLOCK..((k + 1) * BLOCK).min(config.n_paths))
        .collect();
    let threads = match config.workers {
        Workers::Auto => 0,
        Workers::Fixed(n) => n,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| blocks.into_par_iter().map(&per_block).collect())
}

fn superposition(spec: &SuperpositionSpec, v: f64, i: f64) -> f64 {
    spec.l1() * v + spec.l2() * i
}

/// `Z = λ₁V_t + λ₂I_t` for every path, in path order.
pub fn sample_z(params: &CirParams, spec: &SuperpositionSpec, config: &McConfig) -> Result<Vec<f64>> {
    let blocks = run_blocks(config, |range| {
        range
            .map(|i| {
                let mut rng = path_rng(config.seed, i);
                let (v, area) = simulate_path(params, spec.t(), config.n_steps, &mut rng)?;
                Ok(superposition(spec, v, area))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(blocks.concat())
}

/// Empirical `P(Z > R)` with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McTailEstimate {
    pub r: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_exceed: u64,
    /// No path exceeded `R`; the interval is the rule-of-three `[0, 3/n]`.
    pub zero_exceedance: bool,
    pub config: McConfig,
}

/// Wilson score interval at 95% for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + 0.5 * z2 / n_f) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + 0.25 * z2 / (n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// One simulation sweep scored against every threshold in `r_list`.
pub fn estimate_tail(
    params: &CirParams,
    spec: &SuperpositionSpec,
    r_list: &[f64],
    config: &McConfig,
) -> Result<Vec<McTailEstimate>> {
    if r_list.is_empty() {
        return Err(Error::Domain("no tail levels requested".into()));
    }
    let blocks = run_blocks(config, |range| {
        let mut counts = vec![0u64; r_list.len()];
        for i in range {
            let mut rng = path_rng(config.seed, i);
            let (v, area) = simulate_path(params, spec.t(), config.n_steps, &mut rng)?;
            let z = superposition(spec, v, area);
            for (c, &r) in counts.iter_mut().zip(r_list) {
                *c += u64::from(z > r);
            }
        }
        Ok(counts)
    })?;
    let n = config.n_paths;
    Ok(r_list
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let k: u64 = blocks.iter().map(|c| c[j]).sum();
            let (ci_low, ci_high) = if k == 0 { (0.0, 3.0 / n as f64) } else { wilson_interval(k, n) };
            McTailEstimate {
                r,
                p_hat: k as f64 / n as f64,
                ci_low,
                ci_high,
                n_exceed: k,
                zero_exceedance: k == 0,
                config: *config,
            }
        })
        .collect())
}

/// Empirical `E e^{pZ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMgfEstimate {
    pub p: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// `p` is past half the critical moment, where `e^{pZ}` has a heavy
    /// enough tail that the standard error is unreliable.
    pub heavy_tail: bool,
}

/// Running mean and centred second moment, merged pairwise.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }

    fn std_error(&self) -> f64 {
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

fn check_moments(params: &CirParams, spec: &SuperpositionSpec, p_list: &[f64]) -> Result<Vec<bool>> {
    let upper = critical_moment(params, spec, Side::Plus)?;
    let lower = critical_moment(params, spec, Side::Minus)?;
    p_list
        .iter()
        .map(|&p| {
            let mu = if p >= 0.0 { upper } else { lower };
            let limit = 0.8 * mu;
            if !(p.abs() <= limit) {
                return Err(Error::PTooCloseToCritical { p, limit });
            }
            let heavy = p.abs() > 0.5 * mu;
            if heavy {
                log::warn!("heavy-tail-variance: p = {p} exceeds half the critical moment {mu}");
            }
            Ok(heavy)
        })
        .collect()
}

/// Empirical `E e^{p(λ₁V_t + λ₂I_t)}` with standard errors.
///
/// `|p|` may not exceed `0.8` of the critical moment on its side.
pub fn estimate_mgf(
    params: &CirParams,
    spec: &SuperpositionSpec,
    p_list: &[f64],
    config: &McConfig,
) -> Result<Vec<McMgfEstimate>> {
    let heavy = check_moments(params, spec, p_list)?;
    let blocks = run_blocks(config, |range| {
        let mut acc = vec![Moments::default(); p_list.len()];
        for i in range {
            let mut rng = path_rng(config.seed, i);
            let (v, area) = simulate_path(params, spec.t(), config.n_steps, &mut rng)?;
            let z = superposition(spec, v, area);
            for (m, &p) in acc.iter_mut().zip(p_list) {
                m.push((p * z).exp());
            }
        }
        Ok(acc)
    })?;
    Ok(p_list
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let m = blocks.iter().fold(Moments::default(), |acc, b| acc.merge(b[j]));
            McMgfEstimate { p, estimate: m.mean, std_error: m.std_error(), heavy_tail: heavy[j] }
        })
        .collect())
}

/// Sample mean and variance of `V_t` and `I_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathMoments {
    pub mean_v: f64,
    pub var_v: f64,
    pub mean_i: f64,
    pub var_i: f64,
}

pub fn path_moments(params: &CirParams, t: f64, config: &McConfig) -> Result<PathMoments> {
    let blocks = run_blocks(config, |range| {
        let (mut mv, mut mi) = (Moments::default(), Moments::default());
        for i in range {
            let mut rng = path_rng(config.seed, i);
            let (v, area) = simulate_path(params, t, config.n_steps, &mut rng)?;
            mv.push(v);
            mi.push(area);
        }
        Ok((mv, mi))
    })?;
    let (mv, mi) = blocks
        .into_iter()
        .fold((Moments::default(), Moments::default()), |(a, b), (c, d)| (a.merge(c), b.merge(d)));
    Ok(PathMoments {
        mean_v: mv.mean,
        var_v: mv.m2 / (mv.n - 1.0),
        mean_i: mi.mean,
        var_i: mi.m2 / (mi.n - 1.0),
    })
}

/// `E e^{λ₂ I_t}` with `I_t` from the trapezoid rule on `n_steps / 2^k`
/// steps, `k = 0..levels`, all read off the same simulated paths.
///
/// Coarser grids are exact subsamples of the finest path, so differences
/// between levels isolate the trapezoid bias from the sampling noise.
/// Returns `(steps, estimate)` from coarsest to finest.
pub fn trapezoid_refinement(
    params: &CirParams,
    l2: f64,
    t: f64,
    levels: usize,
    config: &McConfig,
) -> Result<Vec<(usize, f64)>> {
    let finest = config.n_steps;
    if levels == 0 || finest % (1 << (levels - 1)) != 0 {
        return Err(Error::InvalidConfig(format!(
            "{finest} steps cannot be halved {} times",
            levels.saturating_sub(1)
        )));
    }
    let dt = t / finest as f64;
    let blocks = run_blocks(config, |range| {
        let mut acc = vec![Moments::default(); levels];
        let mut grid = vec![0.0; finest + 1];
        for i in range {
            let mut rng = path_rng(config.seed, i);
            grid[0] = params.v();
            for j in 0..finest {
                grid[j + 1] = sample_transition(params, grid[j], dt, &mut rng)?;
            }
            for (k, m) in acc.iter_mut().enumerate() {
                let stride = 1 << (levels - 1 - k);
                let coarse: Vec<f64> = grid.iter().step_by(stride).copied().collect();
                let h = dt * stride as f64;
                let inner: f64 = coarse[1..coarse.len() - 1].iter().sum();
                let area = h * (inner + 0.5 * (coarse[0] + coarse[coarse.len() - 1]));
                m.push((l2 * area).exp());
            }
        }
        Ok(acc)
    })?;
    Ok((0..levels)
        .map(|k| {
            let m = blocks.iter().fold(Moments::default(), |acc, b| acc.merge(b[k]));
            (finest >> (levels - 1 - k), m.mean)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> CirParams {
        CirParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn config_floors() {
        assert!(McConfig::new(10, 16, 1, Workers::Auto).is_err());
        assert!(McConfig::new(100, 4, 1, Workers::Auto).is_err());
        assert!(McConfig::new(100, 8, 1, Workers::Fixed(0)).is_err());
        assert!(McConfig::new(100, 8, 1, Workers::Fixed(3)).is_ok());
    }

    #[test]
    fn invalid_dt() {
        let mut rng = path_rng(0, 0);
        assert!(matches!(
            sample_transition(&unit(), 1.0, 0.0, &mut rng),
            Err(Error::InvalidDt { .. })
        ));
    }

    #[test]
    fn absorbed_at_zero_without_drift() {
        let p = CirParams::new(0.0, 1.0, 1.0, 0.0).unwrap();
        let mut rng = path_rng(7, 0);
        for _ in 0..100 {
            assert_eq!(sample_transition(&p, 0.0, 0.1, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn wilson_brackets_the_proportion() {
        let (lo, hi) = wilson_interval(30, 1000);
        assert!(lo < 0.03 && 0.03 < hi);
        let (lo, hi) = wilson_interval(1000, 1000);
        assert!(lo < 1.0 && hi == 1.0);
    }

    #[test]
    fn mgf_at_zero_is_one() {
        let s = SuperpositionSpec::new(0.3, 0.2, 0.7).unwrap();
        let c = McConfig::new(200, 8, 3, Workers::Fixed(2)).unwrap();
        let e = estimate_mgf(&unit(), &s, &[0.0], &c).unwrap();
        assert_eq!(e[0].estimate, 1.0);
        assert_eq!(e[0].std_error, 0.0);
    }

    #[test]
    fn guard_near_critical() {
        let p = CirParams::new(1.0, 0.0, 1.0, 1.0).unwrap();
        let s = SuperpositionSpec::new(0.0, 1.0, 1.0).unwrap();
        let c = McConfig::new(200, 8, 3, Workers::Auto).unwrap();
        let mu = std::f64::consts::PI.powi(2) / 2.0;
        assert!(matches!(
            estimate_mgf(&p, &s, &[0.9 * mu], &c),
            Err(Error::PTooCloseToCritical { .. })
        ));
    }

    #[test]
    fn sure_event() {
        let s = SuperpositionSpec::new(1.0, 0.0, 1.0).unwrap();
        let c = McConfig::new(300, 8, 5, Workers::Auto).unwrap();
        let e = estimate_tail(&unit(), &s, &[-1e10], &c).unwrap();
        assert_eq!(e[0].p_hat, 1.0);
        assert_eq!(e[0].n_exceed, 300);
    }

    #[test]
    fn zero_exceedance_uses_rule_of_three() {
        let s = SuperpositionSpec::new(1.0, 0.0, 1.0).unwrap();
        let c = McConfig::new(300, 8, 5, Workers::Auto).unwrap();
        let e = estimate_tail(&unit(), &s, &[1e6], &c).unwrap();
        assert!(e[0].zero_exceedance);
        assert_eq!((e[0].ci_low, e[0].ci_high), (0.0, 0.01));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let s = SuperpositionSpec::new(0.5, 1.0, 1.0).unwrap();
        let c1 = McConfig::new(3000, 16, 42, Workers::Fixed(1)).unwrap();
        let c4 = c1.with_workers(Workers::Fixed(4)).unwrap();
        assert_eq!(sample_z(&unit(), &s, &c1).unwrap(), sample_z(&unit(), &s, &c4).unwrap());
        let a = estimate_mgf(&unit(), &s, &[0.2, 0.4], &c1).unwrap();
        let b = estimate_mgf(&unit(), &s, &[0.2, 0.4], &c4).unwrap();
        assert_eq!(a, b);
    }
}
