//! Closed-form Riccati solutions checked against numerical integration,
//! quadrature, and the ODE itself.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tailwedge::riccati::{
    classify, evaluate, log_mgf, ode_reference, ode_reference_grid, phi, psi, t_star, CirParams,
    RiccatiTag,
};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

/// Random `(params, λ₁, λ₂)` landing in the requested branch.
fn draw(rng: &mut impl Rng, tag: RiccatiTag) -> (CirParams, f64, f64) {
    let a = rng.random_range(0.0..2.0);
    let b = rng.random_range(-2.0..2.0);
    let sigma: f64 = rng.random_range(0.3..2.0);
    let v = rng.random_range(0.0..2.0);
    let s2 = sigma * sigma;
    let crit = b * b / (2.0 * s2);
    let bs = b / s2;
    let (l1, l2) = match tag {
        RiccatiTag::Critical => (rng.random_range(-2.0..2.0), crit),
        RiccatiTag::Supercritical => (rng.random_range(-2.0..2.0), crit + rng.random_range(0.1..2.0)),
        sub => {
            let l2 = crit - rng.random_range(0.1..2.0);
            let alpha = (b * b - 2.0 * l2 * s2).sqrt() / s2;
            let l1 = match sub {
                RiccatiTag::SubcriticalInside => bs + alpha * rng.random_range(-0.95..0.95),
                _ if rng.random_bool(0.5) => bs + alpha + rng.random_range(0.1..2.0),
                _ => bs - alpha - rng.random_range(0.1..2.0),
            };
            (l1, l2)
        }
    };
    (CirParams::new(a, b, sigma, v).unwrap(), l1, l2)
}

const TAGS: [RiccatiTag; 4] = [
    RiccatiTag::SubcriticalOutside,
    RiccatiTag::SubcriticalInside,
    RiccatiTag::Critical,
    RiccatiTag::Supercritical,
];

fn horizon(params: &CirParams, l1: f64, l2: f64) -> f64 {
    let ts = t_star(params, l1, l2);
    if ts.is_finite() {
        0.9 * ts
    } else {
        5.0
    }
}

#[test]
fn closed_forms_match_ode_in_every_branch() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..80 {
        let tag = TAGS[k % 4];
        let (p, l1, l2) = draw(&mut rng, tag);
        assert_eq!(classify(&p, l1, l2).tag, tag);
        let end = horizon(&p, l1, l2);
        let times: Vec<f64> = (1..=50).map(|i| end * i as f64 / 50.0).collect();
        let traj = ode_reference_grid(&p, l1, l2, &times, 1e-12).unwrap();
        assert!(traj.blowup.is_none());
        for &(t, ps, ph) in &traj.points {
            let e = evaluate(&p, l1, l2, t).unwrap();
            assert!(close(e.psi, ps, 1e-8), "{tag:?} {p:?} {l1} {l2} t={t}: {} vs {ps}", e.psi);
            assert!(close(e.phi, ph, 1e-8), "{tag:?} {p:?} {l1} {l2} t={t}: {} vs {ph}", e.phi);
        }
    }
}

#[test]
fn blowup_times_match_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for k in 0..120 {
        let tag = TAGS[k % 4];
        let (p, l1, l2) = draw(&mut rng, tag);
        let ts = t_star(&p, l1, l2);
        if !ts.is_finite() {
            continue;
        }
        let e = ode_reference(&p, l1, l2, 1.5 * ts, 1e-12).unwrap();
        assert!((e.t_star / ts - 1.0).abs() < 1e-4, "{tag:?}: {} vs {ts}", e.t_star);
        checked += 1;
    }
    assert!(checked >= 40, "only {checked} finite explosion times drawn");
}

#[test]
fn worked_examples() {
    let unit = CirParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let ode = ode_reference(&unit, 0.3, 0.2, 0.7, 1e-12).unwrap();
    assert!(close(psi(&unit, 0.3, 0.2, 0.7).unwrap(), ode.psi, 1e-8));

    // Supercritical φ against composite trapezoid on ψ with Richardson.
    let b0 = CirParams::new(1.0, 0.0, 1.0, 1.0).unwrap();
    let trap = |n: usize| {
        let h = 1.0 / n as f64;
        let inner: f64 = (1..n).map(|i| psi(&b0, 0.0, 1.0, i as f64 * h).unwrap()).sum();
        h * (inner + 0.5 * (psi(&b0, 0.0, 1.0, 0.0).unwrap() + psi(&b0, 0.0, 1.0, 1.0).unwrap()))
    };
    let richardson = (4.0 * trap(4000) - trap(2000)) / 3.0;
    let closed = phi(&b0, 0.0, 1.0, 1.0).unwrap();
    assert!(close(closed, richardson, 1e-8), "{closed} vs {richardson}");
    // (2/σ²) (ln cos 0 − ln cos(√2/2)) in the tangent parametrization.
    assert!(close(closed, -2.0 * (0.5f64.sqrt()).cos().ln(), 1e-14));

    // First order in λ₁ at the stationary mean.
    let eps = 1e-7;
    let lm = log_mgf(&unit, eps, 0.0, 1.3).unwrap();
    assert!((lm / eps - 1.0).abs() < 1e-6);
}

#[test]
fn case_continuity_across_the_critical_line() {
    let p = CirParams::new(0.5, 1.0, 1.0, 1.0).unwrap();
    let crit = 0.5;
    for l1 in [-1.0, 0.5, 1.6] {
        let t = 0.5 * t_star(&p, l1, crit).min(4.0);
        let centre = psi(&p, l1, crit, t).unwrap();
        for d in [-1e-6, 1e-6] {
            let near = psi(&p, l1, crit + d, t).unwrap();
            assert!((near - centre).abs() < 1e-4, "{l1} {d}: {near} vs {centre}");
        }
    }
}

fn params_strategy() -> impl Strategy<Value = (CirParams, f64, f64)> {
    (0usize..4, any::<u64>()).prop_map(|(k, seed)| draw(&mut ChaCha8Rng::seed_from_u64(seed), TAGS[k]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn residual_and_antiderivative((p, l1, l2) in params_strategy(), frac in 0.02f64..0.98) {
        let t = frac * horizon(&p, l1, l2);
        let h = 1e-5 * t.max(1e-3);
        let s2 = p.sigma() * p.sigma();
        let val = psi(&p, l1, l2, t).unwrap();
        let dpsi = (psi(&p, l1, l2, t + h).unwrap() - psi(&p, l1, l2, t - h).unwrap()) / (2.0 * h);
        let rhs = 0.5 * s2 * val * val - p.b() * val + l2;
        prop_assert!((dpsi - rhs).abs() <= 1e-6 * (1.0 + val * val), "{dpsi} vs {rhs}");
        let dphi = (phi(&p, l1, l2, t + h).unwrap() - phi(&p, l1, l2, t - h).unwrap()) / (2.0 * h);
        prop_assert!((dphi - val).abs() <= 1e-6 * (1.0 + val.abs()), "{dphi} vs {val}");
    }

    #[test]
    fn initial_conditions((p, l1, l2) in params_strategy()) {
        prop_assert_eq!(psi(&p, l1, l2, 0.0).unwrap(), l1);
        prop_assert_eq!(phi(&p, l1, l2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn monotone_in_both_coefficients(
        (p, l1, l2) in params_strategy(),
        d1 in 0.0f64..0.5,
        d2 in 0.0f64..0.5,
        frac in 0.05f64..0.95,
    ) {
        let t = frac * horizon(&p, l1 + d1, l2 + d2).min(horizon(&p, l1, l2));
        let lo = psi(&p, l1, l2, t).unwrap();
        let hi = psi(&p, l1 + d1, l2 + d2, t).unwrap();
        prop_assert!(lo <= hi + 1e-12 * hi.abs().max(1.0), "{lo} > {hi}");
    }
}
