//! The simulator against closed-form moments and transforms.

use tailwedge::critical::{cir_mgf_model, mu_plus, SuperpositionSpec};
use tailwedge::montecarlo::{
    estimate_mgf, estimate_tail, path_moments, path_rng, sample_transition, sample_z, simulate_path,
    trapezoid_refinement, McConfig, Workers,
};
use tailwedge::riccati::{log_mgf, CirParams};
use tailwedge::tauberian::legendre;
use tailwedge::Error;

fn unit() -> CirParams {
    CirParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

fn within_se(est: f64, se: f64, want: f64, k: f64) -> bool {
    (est - want).abs() <= k * se
}

#[test]
fn transition_mean_and_variance() {
    let p = unit();
    let mut rng = path_rng(5, 0);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| sample_transition(&p, 1.0, 1.0, &mut rng).unwrap()).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(within_se(mean, (var / n as f64).sqrt(), 1.0, 3.0), "{mean}");
    assert!((var / p.var_v(1.0) - 1.0).abs() < 0.03, "{var} vs {}", p.var_v(1.0));
}

#[test]
fn absorbing_at_zero_without_drift() {
    let p = CirParams::new(0.0, 1.0, 1.0, 0.0).unwrap();
    let mut rng = path_rng(1, 0);
    for _ in 0..1000 {
        assert_eq!(sample_transition(&p, 0.0, 0.3, &mut rng).unwrap(), 0.0);
    }
    assert!(matches!(sample_transition(&p, 0.0, 0.0, &mut rng), Err(Error::InvalidDt { .. })));
}

#[test]
fn terminal_moments_within_four_standard_errors() {
    let cases = [unit(), CirParams::new(0.3, 2.0, 0.9, 0.5).unwrap(), CirParams::new(2.0, 0.0, 1.2, 0.1).unwrap()];
    let config = McConfig::new(100_000, 32, 3, Workers::Auto).unwrap();
    let n = config.n_paths() as f64;
    for p in cases {
        let m = path_moments(&p, 1.0, &config).unwrap();
        let want_v = p.mean_v(1.0);
        assert!(within_se(m.mean_v, (m.var_v / n).sqrt(), want_v, 4.0), "{p:?} {m:?}");
        // Normal-theory standard error of a sample variance, doubled for skew.
        let se_var = 2.0 * p.var_v(1.0) * (2.0 / n).sqrt();
        assert!((m.var_v - p.var_v(1.0)).abs() <= 4.0 * se_var, "{p:?} {m:?}");
        // The trapezoid bias in E[I] is O(dt²) times the curvature of E[V].
        assert!(within_se(m.mean_i, (m.var_i / n).sqrt(), p.mean_i(1.0), 4.0), "{p:?} {m:?}");
    }
}

#[test]
fn mean_integrated_variance_is_one_at_stationarity() {
    let config = McConfig::new(100_000, 16, 8, Workers::Auto).unwrap();
    let m = path_moments(&unit(), 1.0, &config).unwrap();
    assert!(within_se(m.mean_i, (m.var_i / 1e5).sqrt(), 1.0, 3.0), "{m:?}");
}

#[test]
fn nearly_deterministic_path() {
    let p = CirParams::new(0.7, 1.3, 1e-6, 2.0).unwrap();
    let mut rng = path_rng(2, 0);
    let (v, i) = simulate_path(&p, 1.0, 64, &mut rng).unwrap();
    assert!((v - p.mean_v(1.0)).abs() < 1e-4, "{v}");
    assert!((i - p.mean_i(1.0)).abs() < 1e-3, "{i}");
}

#[test]
fn mgf_matches_the_closed_form() {
    let config = McConfig::new(100_000, 64, 17, Workers::Auto).unwrap();
    let p = unit();
    let s = SuperpositionSpec::new(1.0, 0.0, 1.0).unwrap();
    let est = estimate_mgf(&p, &s, &[0.0, 0.5], &config).unwrap();
    assert_eq!(est[0].estimate, 1.0);
    assert_eq!(est[0].std_error, 0.0);
    let want = log_mgf(&p, 0.5, 0.0, 1.0).unwrap().exp();
    assert!(within_se(est[1].estimate, est[1].std_error, want, 3.0), "{:?} vs {want}", est[1]);

    let b0 = CirParams::new(1.0, 0.0, 1.0, 1.0).unwrap();
    let s = SuperpositionSpec::new(0.0, 1.0, 1.0).unwrap();
    let mu = mu_plus(&b0, &s).unwrap();
    let config = McConfig::new(200_000, 256, 17, Workers::Auto).unwrap();
    let est = estimate_mgf(&b0, &s, &[0.5 * mu], &config).unwrap();
    let want = log_mgf(&b0, 0.0, 0.5 * mu, 1.0).unwrap().exp();
    assert!(within_se(est[0].estimate, est[0].std_error, want, 3.0), "{:?} vs {want}", est[0]);
    assert!(matches!(
        estimate_mgf(&b0, &s, &[0.9 * mu], &config),
        Err(Error::PTooCloseToCritical { .. })
    ));
}

#[test]
fn trapezoid_bias_falls_as_inverse_square() {
    // Strong mean reversion from a high start gives E[V] visible curvature,
    // so the bias is well above the noise in the level differences.
    let p = CirParams::new(1.0, 4.0, 0.5, 3.0).unwrap();
    let config = McConfig::new(100_000, 256, 4, Workers::Auto).unwrap();
    let levels = trapezoid_refinement(&p, 0.2, 1.0, 5, &config).unwrap();
    let steps: Vec<usize> = levels.iter().map(|l| l.0).collect();
    assert_eq!(steps, [16, 32, 64, 128, 256]);
    let pts: Vec<(f64, f64)> =
        levels.windows(2).map(|w| ((w[0].0 as f64).ln(), (w[0].1 - w[1].1).abs().ln())).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let slope = tailwedge::numeric::regression::slope(&xs, &ys);
    assert!((slope + 2.0).abs() <= 0.4, "{slope} {levels:?}");
}

#[test]
fn chernoff_bound_dominates_the_empirical_tail() {
    let p = unit();
    let s = SuperpositionSpec::new(1.0, 0.0, 1.0).unwrap();
    let config = McConfig::new(200_000, 8, 99, Workers::Auto).unwrap();
    let mut z = sample_z(&p, &s, &config).unwrap();
    z.sort_by(f64::total_cmp);
    let q999 = z[(0.999 * z.len() as f64) as usize];
    let model = cir_mgf_model(p, s).unwrap();
    let levels = [2.0, 3.0, 4.0, q999];
    let est = estimate_tail(&p, &s, &levels, &config).unwrap();
    for e in &est {
        let bound = (-legendre(&model, e.r).unwrap().lambda_star).exp();
        assert!(e.ci_low <= bound, "{e:?} {bound}");
        assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high);
    }
    let sure = estimate_tail(&p, &s, &[-1e10], &config).unwrap();
    assert_eq!(sure[0].p_hat, 1.0);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let p = CirParams::new(0.5, 0.8, 1.1, 0.4).unwrap();
    let s = SuperpositionSpec::new(0.4, 0.9, 1.5).unwrap();
    let base = McConfig::new(5_000, 16, 42, Workers::Fixed(1)).unwrap();
    let one = estimate_mgf(&p, &s, &[0.3, -0.7], &base).unwrap();
    let z_one = sample_z(&p, &s, &base).unwrap();
    for w in [Workers::Fixed(3), Workers::Fixed(8), Workers::Auto] {
        let cfg = base.with_workers(w).unwrap();
        assert_eq!(estimate_mgf(&p, &s, &[0.3, -0.7], &cfg).unwrap(), one);
        assert_eq!(sample_z(&p, &s, &cfg).unwrap(), z_one);
    }
}
