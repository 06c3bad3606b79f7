use covert_isac::fdbf::{solve_fdbf, FdbfOptions};
use covert_isac::linalg::{c, CMat, CVec};
use covert_isac::model::*;
use covert_isac::numerics::QcqpOneProblem;
use covert_isac::oracles::*;
use covert_isac::Error;

fn stats(k0: f64, k1: f64) -> HypothesisStats {
    HypothesisStats::new(k0, k1, 2.0).unwrap()
}

#[test]
fn monte_carlo_detector_matches_closed_form() {
    let s = stats(1.0, 2.0);
    let exact = detection_error_exact(&s).unwrap();
    assert!((exact - 0.75).abs() < 1e-12);
    let mc = mc_willie_detector(&s, 1_000_000, 1).unwrap();
    assert!((mc.p_e - exact).abs() <= 3.0 * mc.std_err, "{} vs {exact} (se {})", mc.p_e, mc.std_err);
    assert!((mc.p_e - mc.false_alarm - mc.missed_detection).abs() < 1e-15);
    assert_eq!(mc, mc_willie_detector(&s, 1_000_000, 1).unwrap());
}

#[test]
fn monte_carlo_detector_edge_cases() {
    let flat = mc_willie_detector(&stats(1.0, 1.0), 10_000, 0).unwrap();
    assert_eq!(flat.p_e, 1.0);
    assert_eq!(flat.std_err, 0.0);
    assert!(matches!(mc_willie_detector(&stats(1.0, 2.0), 9_999, 0), Err(Error::InvalidConfig(_))));
}

#[test]
fn standard_error_scales_with_trials() {
    let s = stats(1.0, 3.0);
    let full = mc_willie_detector(&s, 400_000, 5).unwrap();
    let half = mc_willie_detector(&s, 200_000, 5).unwrap();
    let ratio = half.std_err / full.std_err;
    assert!((ratio - 2f64.sqrt()).abs() < 0.03, "{ratio}");
}

#[test]
fn threshold_balances_likelihoods() {
    let (k0, k1) = (1.5, 4.0);
    let tau = np_threshold(k0, k1);
    let p0 = (-tau / k0).exp() / k0;
    let p1 = (-tau / k1).exp() / k1;
    assert!((p0 - p1).abs() < 1e-14);
}

#[test]
fn numeric_divergence_examples() {
    assert!(numeric_kl(2.0, 2.0).abs() < 1e-15);
    let e = std::f64::consts::E;
    assert!((numeric_kl(1.0, e) - 1.0 / e).abs() < 1e-8);
    let (a, b) = (numeric_kl(1.0, 3.0), numeric_kl(3.0, 1.0));
    assert!((a - b).abs() > 0.1, "{a} {b}");
    for &(k0, k1) in &[(0.3, 0.31), (1.0, 10.0), (2.0, 1.2)] {
        let z: f64 = k1 / k0;
        let closed = z.ln() + 1.0 / z - 1.0;
        assert!((numeric_kl(k0, k1) - closed).abs() < 1e-10);
    }
}

#[test]
fn quadrature_examples() {
    let v = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
    assert!((v - 2.0).abs() < 1e-10);
    let v = adaptive_simpson(|x| (-x * x).exp(), -8.0, 8.0, 1e-13);
    assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-10);
}

#[test]
fn brute_projection_onto_ball() {
    let t = CVec::from_vec(vec![c(3.0), c(-4.0), c(0.0)]);
    let p = QcqpOneProblem { target: t, quad: CMat::identity(3, 3), bound: 1.0 };
    assert!((brute_qcqp(&p, 4, 0) - 16.0).abs() < 1e-8);
    let inside = QcqpOneProblem { target: CVec::from_vec(vec![c(0.1), c(0.1), c(0.1)]), ..p.clone() };
    assert_eq!(brute_qcqp(&inside, 4, 0), 0.0);
}

#[test]
fn ball_verifier_at_zero_radius_is_the_nominal_slack() {
    let cfg = SystemConfig::default().with_antennas(16, 16).with_carols(2);
    let ch = generate_random_channels(&cfg, 3).unwrap();
    let scene = SensingScene::standard(0);
    let out = solve_fdbf(&ch, &scene, &cfg, &FdbfOptions::default()).unwrap();
    let gamma_cap = solve_gamma_cap(cfg.covert_eps);
    let nominal = gamma_cap - hypothesis_stats(&out.solution, &ch, &cfg).z;
    let sampled = ball_sample_verifier(&out.solution, &ch, &cfg, gamma_cap, 100, 3);
    assert!((nominal - sampled).abs() < 1e-14, "{nominal} vs {sampled}");
    assert!(sampled >= -1e-8);
}
