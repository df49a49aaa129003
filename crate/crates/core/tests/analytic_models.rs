//! Closed-form models against independent references.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma_ur;
use tailwedge::analytic::{gamma_exact_log_sf, gamma_model, heston_log_mgf, GammaParams, HestonParams};
use tailwedge::riccati::{log_mgf, ode_reference, CirParams};
use tailwedge::tauberian::legendre;

#[test]
fn gamma_legendre_identity_and_chernoff_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let k = rng.random_range(1..8) as f64;
        let theta = rng.random_range(0.2..3.0);
        let params = GammaParams::new(k, theta).unwrap();
        let m = gamma_model(params);
        for mult in [2.0, 5.0, 10.0] {
            let r = mult * k * theta;
            let expected = r / theta - k - k * (r / (k * theta)).ln();
            let got = legendre(&m, r).unwrap().lambda_star;
            assert!(((got - expected) / expected).abs() < 1e-8, "{k} {theta} {r}");
            assert!(gamma_exact_log_sf(&params, r).unwrap() <= -got);
        }
    }
}

#[test]
fn incomplete_gamma_matches_reference_library() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let k = rng.random_range(0.1..20.0);
        let x = rng.random_range(0.01..60.0);
        let ours = gamma_exact_log_sf(&GammaParams::new(k, 1.0).unwrap(), x).unwrap();
        let reference = gamma_ur(k, x).ln();
        assert!((ours - reference).abs() < 1e-9 * reference.abs().max(1.0), "{k} {x}: {ours} {reference}");
    }
}

#[test]
fn heston_reduces_to_cir_at_zero_correlation() {
    let cir = CirParams::new(0.8, 1.4, 0.6, 0.3).unwrap();
    let h = HestonParams::new(cir, 0.0).unwrap();
    for p in [-1.5, 0.3, 2.0, 3.5] {
        for t in [0.1, 0.5, 1.0] {
            let a = heston_log_mgf(&h, p, t).unwrap();
            let b = log_mgf(&cir, 0.0, 0.5 * (p * p - p), t).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn heston_against_ode() {
    let cir = CirParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let h = HestonParams::new(cir, 0.0).unwrap();
    let ode = ode_reference(&cir, 0.0, 1.0, 0.1, 1e-12).unwrap();
    let want = ode.phi + ode.psi;
    assert!((heston_log_mgf(&h, 2.0, 0.1).unwrap() - want).abs() < 1e-8 * want.abs().max(1.0));

    // With correlation the drift moves to b − ρσp.
    let hr = HestonParams::new(cir, -0.6).unwrap();
    let shifted = CirParams::new(1.0, 1.0 + 0.6 * 2.0, 1.0, 1.0).unwrap();
    let ode = ode_reference(&shifted, 0.0, 1.0, 0.4, 1e-12).unwrap();
    let want = ode.phi + ode.psi;
    assert!((heston_log_mgf(&hr, 2.0, 0.4).unwrap() - want).abs() < 1e-8 * want.abs().max(1.0));
}

#[test]
fn heston_explodes_past_the_moment_horizon() {
    let h = HestonParams::new(CirParams::new(1.0, 0.0, 1.0, 1.0).unwrap(), 0.5).unwrap();
    assert!(heston_log_mgf(&h, 8.0, 10.0).is_err());
}
