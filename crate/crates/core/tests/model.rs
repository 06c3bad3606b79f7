use std::f64::consts::{E, PI};

use covert_isac::linalg::{c, CMat, CVec, C64};
use covert_isac::model::*;
use covert_isac::numerics::quad::integrate;
use covert_isac::oracles::{np_threshold, numeric_kl};
use covert_isac::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn cn(rng: &mut ChaCha8Rng) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

fn random_mat(r: usize, k: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(r, k, |_, _| cn(rng))
}

fn small_cfg() -> SystemConfig {
    SystemConfig::default().with_antennas(8, 8).with_carols(2)
}

fn stats(k0: f64, k1: f64) -> HypothesisStats {
    HypothesisStats::new(k0, k1, 1.0).unwrap()
}

#[test]
fn steering_broadside_is_flat() {
    let a = steering(0.0, 4);
    for z in a.iter() {
        assert!((z - c(0.5)).norm() < 1e-15);
    }
}

#[test]
fn steering_endfire_alternates() {
    let a = steering(PI / 2.0, 2);
    let s = 1.0 / 2f64.sqrt();
    assert!((a[0] - c(s)).norm() < 1e-15);
    assert!((a[1] - c(-s)).norm() < 1e-12);
}

#[test]
fn steering_phases_and_norm() {
    let th = 10f64.to_radians();
    let a = steering(th, 32);
    assert!((a.norm() - 1.0).abs() < 1e-14);
    for (m, z) in a.iter().enumerate() {
        let expected = C64::from_polar(1.0 / 32f64.sqrt(), PI * m as f64 * th.sin());
        assert!((z - expected).norm() < 1e-13);
    }
}

#[test]
fn single_path_channel_is_scaled_steering() {
    let cfg = SystemConfig::default().with_antennas(8, 8).with_carols(1);
    let geo = vec![vec![Path { angle: 0.0, gain: c(1.0) }]; cfg.streams()];
    let ch = generate_channels(&cfg, &geo).unwrap();
    let expected = steering(0.0, 8) * c(8f64.sqrt());
    for i in 0..cfg.streams() {
        assert!((ch.column(i) - &expected).norm() < 1e-13);
    }
    assert_eq!(ch.willie_radius, 0.0);
    assert_eq!(ch.willie_est, ch.willie());
}

#[test]
fn multipath_channel_matches_brute_sum() {
    let cfg = small_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let geo = random_geometry(cfg.streams(), 3, &mut rng);
    let ch = generate_channels(&cfg, &geo).unwrap();
    for (i, paths) in geo.iter().enumerate() {
        let mut col = CVec::zeros(cfg.mt);
        for p in paths {
            for m in 0..cfg.mt {
                let phase = PI * m as f64 * p.angle.sin();
                col[m] += p.gain * C64::from_polar(1.0, phase);
            }
        }
        assert!((ch.column(i) - col).norm() < 1e-12);
    }
}

#[test]
fn channel_generation_errors_and_determinism() {
    let cfg = small_cfg();
    let mut geo = vec![vec![Path { angle: 0.1, gain: c(1.0) }]; cfg.streams()];
    geo[1].clear();
    assert!(matches!(generate_channels(&cfg, &geo), Err(Error::InvalidGeometry(_))));
    assert!(matches!(generate_channels(&cfg, &geo[..2]), Err(Error::InvalidGeometry(_))));
    let a = generate_random_channels(&cfg, 3).unwrap();
    let b = generate_random_channels(&cfg, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_validation() {
    assert!(SystemConfig::default().validate().is_ok());
    let mut c1 = SystemConfig::default();
    c1.n_rf = 40;
    assert!(matches!(c1.validate(), Err(Error::InvalidConfig(_))));
    let mut c2 = SystemConfig::default();
    c2.covert_eps = 1.0;
    assert!(c2.validate().is_err());
    let mut c3 = SystemConfig::default();
    c3.noise_radar = 0.0;
    assert!(c3.validate().is_err());
    let mut c4 = SystemConfig::default();
    c4.angular_samples = 1;
    assert!(c4.validate().is_err());
    let scene = SensingScene { target_angle: 2.0, target_amp: c(1.0), clutters: vec![] };
    assert!(matches!(scene.validate(), Err(Error::InvalidGeometry(_))));
}

#[test]
fn orthogonal_channels_give_closed_form_rates() {
    let cfg = SystemConfig::default().with_antennas(3, 3).with_carols(1);
    let h = CMat::identity(3, 3);
    let ch = ChannelSet::new(h.clone());
    let p = cfg.total_power;
    let v = &h * c((p / 3.0).sqrt());
    let bf = BeamformerSolution::fully_digital(v, steering(0.0, 3));
    let (overt, covert) = sinr_and_rates(&bf, &ch, &cfg);
    let expected = (1.0 + p / (3.0 * cfg.noise_bob)).log2();
    for r in overt.iter().chain([&covert]) {
        assert!((r - expected).abs() < 1e-12);
    }
}

#[test]
fn silent_covert_beam_has_zero_rate_and_no_leak() {
    let cfg = small_cfg();
    let ch = generate_random_channels(&cfg, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut v = random_mat(cfg.mt, cfg.streams(), &mut rng);
    v.column_mut(cfg.bob()).fill(c(0.0));
    let bf = BeamformerSolution::fully_digital(v, steering(0.0, cfg.mr));
    assert_eq!(sinr_and_rates(&bf, &ch, &cfg).1, 0.0);
    let s = hypothesis_stats(&bf, &ch, &cfg);
    assert_eq!(s.kappa0, s.kappa1);
    assert_eq!(s.z, 1.0);
    let zero = BeamformerSolution::fully_digital(CMat::zeros(cfg.mt, cfg.streams()), steering(0.0, cfg.mr));
    let s0 = hypothesis_stats(&zero, &ch, &cfg);
    assert_eq!((s0.kappa0, s0.kappa1), (cfg.noise_willie, cfg.noise_willie));
}

#[test]
fn leak_equals_willie_gain_of_covert_beam() {
    let cfg = small_cfg();
    let ch = generate_random_channels(&cfg, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let v = random_mat(cfg.mt, cfg.streams(), &mut rng);
    let bf = BeamformerSolution::fully_digital(v.clone(), steering(0.0, cfg.mr));
    let s = hypothesis_stats(&bf, &ch, &cfg);
    let hw = ch.willie();
    let mut leak = c(0.0);
    for m in 0..cfg.mt {
        leak += hw[m].conj() * v[(m, cfg.bob())];
    }
    assert!(((s.kappa1 - s.kappa0) - leak.norm_sqr()).abs() < 1e-10 * s.kappa1);
}

#[test]
fn rates_match_symbol_level_simulation() {
    let cfg = small_cfg();
    let ch = generate_random_channels(&cfg, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = random_mat(cfg.mt, cfg.streams(), &mut rng) * c(0.2);
    let bf = BeamformerSolution::fully_digital(v.clone(), steering(0.0, cfg.mr));
    let (overt, covert) = sinr_and_rates(&bf, &ch, &cfg);
    let n = 200_000;
    let k = cfg.streams();
    let g = ch.h.adjoint() * &v;
    let mut sig = vec![0.0; k];
    let mut rest = vec![0.0; k];
    for _ in 0..n {
        let s: Vec<C64> = (0..k).map(|_| cn(&mut rng)).collect();
        for i in 0..k {
            let noise = cn(&mut rng) * cfg.noise(i).sqrt();
            let own = g[(i, i)] * s[i];
            let mut other = noise;
            for j in (0..k).filter(|&j| j != i) {
                other += g[(i, j)] * s[j];
            }
            sig[i] += own.norm_sqr();
            rest[i] += other.norm_sqr();
        }
    }
    let rates: Vec<f64> = overt.iter().cloned().chain([covert]).collect();
    for i in 0..k {
        let sinr_mc = sig[i] / rest[i];
        let sinr = 2f64.powf(rates[i]) - 1.0;
        assert!((sinr_mc / sinr - 1.0).abs() < 0.01, "stream {i}: {sinr_mc} vs {sinr}");
    }
}

#[test]
fn detection_error_examples() {
    assert_eq!(detection_error_exact(&stats(1.0, 1.0)).unwrap(), 1.0);
    let pe = detection_error_exact(&stats(1.0, 2.0)).unwrap();
    assert!((pe - 0.75).abs() < 1e-14);
    let bad = HypothesisStats { kappa0: 0.0, kappa1: 1.0, z: f64::INFINITY, gamma_cap: 1.0 };
    assert!(matches!(detection_error_exact(&bad), Err(Error::InvalidStats(_))));
}

#[test]
fn detection_error_equals_threshold_test_error() {
    // False alarm and miss of the likelihood-ratio threshold on exponential laws.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let k0 = rng.random_range(0.1..5.0);
        let k1 = k0 * rng.random_range(1.001..50.0);
        let tau = np_threshold(k0, k1);
        let oracle = (-tau / k0).exp() + 1.0 - (-tau / k1).exp();
        let pe = detection_error_exact(&stats(k0, k1)).unwrap();
        assert!((pe - oracle).abs() < 1e-12, "{pe} vs {oracle}");
    }
}

#[test]
fn detection_error_decreases_in_ratio() {
    let mut prev = 1.0;
    for k in 1..=1000 {
        let z = 1.0 + 99.0 * k as f64 / 1000.0;
        let pe = detection_error_exact(&stats(1.0, z)).unwrap();
        assert!(pe < prev, "z={z}");
        prev = pe;
    }
}

#[test]
fn kl_examples() {
    let d0 = kl_divergence(&stats(2.0, 2.0));
    assert_eq!((d0.divergence, d0.p_e_bound), (0.0, 1.0));
    let d = kl_divergence(&stats(1.0, E));
    assert!((d.divergence - (-1f64).exp()).abs() < 1e-15);
    assert!((numeric_kl(1.0, E) - (-1f64).exp()).abs() < 1e-8);
}

#[test]
fn gamma_cap_solves_divergence_budget() {
    for &eps in &[1e-4, 1e-3, 0.01, 0.1, 0.5] {
        let g = solve_gamma_cap(eps);
        let resid = g.ln() + 1.0 / g - 1.0 - 2.0 * eps * eps;
        assert!(resid.abs() <= 1e-12, "eps {eps}: {resid}");
        assert!(g >= 1.0);
    }
    assert!(solve_gamma_cap(1e-9) - 1.0 < 1e-6);
    let grid: Vec<f64> = (1..50).map(|k| k as f64 / 100.0).collect();
    for w in grid.windows(2) {
        assert!(solve_gamma_cap(w[0]) < solve_gamma_cap(w[1]));
    }
}

/// `I0(z) exp(-z)` from its integral representation.
fn scaled_i0_oracle(z: f64) -> f64 {
    integrate(|t: f64| (z * (t.cos() - 1.0)).exp(), 0.0, PI, 8, 24) / PI
}

/// Rician tail `int_b^inf x exp(-(x^2 + a^2)/2) I0(a x) dx`.
fn marcum_oracle(a: f64, b: f64) -> f64 {
    let f = |x: f64| x * (-0.5 * (x - a) * (x - a)).exp() * scaled_i0_oracle(a * x);
    integrate(f, b, a.max(b) + 16.0, 200, 16)
}

#[test]
fn detection_probability_examples() {
    for &pfa in &[1e-6, 1e-4, 0.1] {
        assert!((detection_probability(0.0, pfa) - pfa).abs() < 1e-14);
    }
    assert!(detection_probability(3.0, 1.0 - 1e-12) > 1.0 - 1e-9);
    let pd = detection_probability(10.0, 1e-4);
    let oracle = marcum_oracle(20f64.sqrt(), (-2.0 * 1e-4f64.ln()).sqrt());
    assert!((pd - oracle).abs() < 1e-8, "{pd} vs {oracle}");
}

#[test]
fn marcum_matches_craig_form() {
    // For a < b: Q1(a, b) = (1/2pi) int_{-pi}^{pi} (1 + r sin t) e^{-b^2 (1 + 2 r sin t + r^2)/2} / (1 + 2 r sin t + r^2) dt.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..40 {
        let b = rng.random_range(0.5..12.0);
        let a = b * rng.random_range(0.0..0.95);
        let r = a / b;
        let f = |t: f64| {
            let den = 1.0 + 2.0 * r * t.sin() + r * r;
            (1.0 + r * t.sin()) * (-0.5 * b * b * den).exp() / den
        };
        let craig = integrate(f, -PI, PI, 64, 24) / (2.0 * PI);
        assert!((marcum_q1(a, b) - craig).abs() < 1e-10, "a={a} b={b}");
    }
    for &(a, b) in &[(6.0, 5.5), (9.0, 4.0), (3.0, 2.0), (12.0, 11.0)] {
        assert!((marcum_q1(a, b) - marcum_oracle(a, b)).abs() < 1e-9, "a={a} b={b}");
    }
}

#[test]
fn detection_probability_increases_with_sinr() {
    let mut prev = 0.0;
    for k in 0..200 {
        let pd = detection_probability(k as f64 * 0.25, 1e-4);
        assert!(pd >= prev);
        assert!((1e-4 - 1e-12..=1.0).contains(&pd));
        prev = pd;
    }
}

fn scene_no_clutter() -> SensingScene {
    SensingScene { target_angle: 10f64.to_radians(), target_amp: C64::from_polar(2.0, 0.3), clutters: vec![] }
}

#[test]
fn sensing_sinr_without_clutter() {
    let cfg = small_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v = random_mat(cfg.mt, cfg.streams(), &mut rng);
    let w = steering(0.3, cfg.mr);
    let scene = scene_no_clutter();
    let bf = BeamformerSolution::fully_digital(v.clone(), w.clone());
    let a = response(scene.target_angle, cfg.mt, cfg.mr);
    let num: f64 = (0..cfg.streams()).map(|i| w.dotc(&(&a * v.column(i))).norm_sqr()).sum();
    let expected = scene.target_amp.norm_sqr() * num / cfg.noise_radar;
    let got = sensing_sinr(&bf, &scene, &cfg).unwrap();
    assert!((got / expected - 1.0).abs() < 1e-12);
    let scaled = BeamformerSolution::fully_digital(v, w * C64::new(-3.0, 2.0));
    assert!((sensing_sinr(&scaled, &scene, &cfg).unwrap() / got - 1.0).abs() < 1e-12);
    let zero = BeamformerSolution::fully_digital(bf.v_full.clone(), CVec::zeros(cfg.mr));
    assert!(matches!(sensing_sinr(&zero, &scene, &cfg), Err(Error::InvalidFilter)));
}

#[test]
fn sensing_sinr_matches_echo_simulation() {
    let cfg = small_cfg();
    let scene = SensingScene::standard(3);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let v = random_mat(cfg.mt, cfg.streams(), &mut rng) * c(0.3);
    let w = steering(scene.target_angle, cfg.mr) + random_mat(cfg.mr, 1, &mut rng).column(0) * c(0.2);
    let bf = BeamformerSolution::fully_digital(v.clone(), w.clone());
    let target = response(scene.target_angle, cfg.mt, cfg.mr) * &v * scene.target_amp;
    let clutters: Vec<CMat> =
        scene.clutters.iter().map(|q| response(q.angle, cfg.mt, cfg.mr) * &v * q.amp).collect();
    let (mut ps, mut pd) = (0.0, 0.0);
    for _ in 0..200_000 {
        let s = CVec::from_fn(cfg.streams(), |_, _| cn(&mut rng));
        // Reflector phases are independent across snapshots.
        let mut y = CVec::from_fn(cfg.mr, |_, _| cn(&mut rng) * cfg.noise_radar.sqrt());
        for q in &clutters {
            y += q * &s * C64::from_polar(1.0, rng.random_range(-PI..PI));
        }
        ps += w.dotc(&(&target * &s)).norm_sqr();
        pd += w.dotc(&y).norm_sqr();
    }
    let got = sensing_sinr(&bf, &scene, &cfg).unwrap();
    assert!(((ps / pd) / got - 1.0).abs() < 0.01, "{} vs {got}", ps / pd);
}

#[test]
fn beampattern_peaks_on_matched_beam() {
    let cfg = SystemConfig::default();
    let th = 10f64.to_radians();
    let mut v = CMat::zeros(cfg.mt, cfg.streams());
    v.set_column(0, &(steering(th, cfg.mt) * c(cfg.total_power.sqrt())));
    let bf = BeamformerSolution::fully_digital(v, steering(th, cfg.mr));
    let grid = angle_grid(cfg.angular_samples);
    let bp = beampattern(&bf, &cfg, &grid);
    assert_eq!(bp.len(), 181);
    let (peak, max) = bp.iter().fold((0.0, f64::NEG_INFINITY), |acc, &(a, db)| if db > acc.1 { (a, db) } else { acc });
    assert_eq!(max, 0.0);
    assert!((peak - th).abs() < 1e-12);
    assert!((grid[0] + PI / 2.0).abs() < 1e-15 && (grid[180] - PI / 2.0).abs() < 1e-15);
}

#[test]
fn db_and_degree_conversions() {
    assert!((db_to_lin(10.0) - 10.0).abs() < 1e-12);
    assert!((lin_to_db(100.0) - 20.0).abs() < 1e-12);
    assert!((deg(PI) - 180.0).abs() < 1e-12);
}

#[test]
fn hybrid_solution_structure_checks() {
    let cfg = small_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rf = CMat::from_fn(cfg.mt, cfg.n_rf, |_, _| C64::from_polar(1.0, rng.random_range(-PI..PI)));
    let d = random_mat(cfg.n_rf, cfg.streams(), &mut rng);
    let bf = BeamformerSolution::hybrid(rf.clone(), d.clone(), steering(0.0, cfg.mr));
    assert!(bf.check(&cfg).is_ok());
    let mut broken = bf.clone();
    broken.v_rf = Some(rf * c(1.1));
    assert!(broken.check(&cfg).is_err());
}

#[test]
fn audit_reports_relative_slacks() {
    let cfg = SystemConfig::default().with_antennas(3, 3).with_carols(1);
    let ch = ChannelSet::new(CMat::identity(3, 3));
    let v = CMat::identity(3, 3) * c((cfg.total_power / 3.0).sqrt());
    let bf = BeamformerSolution::fully_digital(v, steering(0.0, 3));
    let scene = scene_no_clutter();
    let a = audit(&bf, &ch, &scene, &cfg, &AuditScope::nominal(&cfg)).unwrap();
    assert!(a.power.abs() < 1e-12);
    let sinr = cfg.total_power / (3.0 * cfg.noise_bob);
    for &(_, s) in &a.qos {
        assert!((s - (sinr - 1.0)).abs() < 1e-9);
    }
    assert!((a.covert - (solve_gamma_cap(cfg.covert_eps) - 1.0)).abs() < 1e-12);
    assert!(a.sensing.is_some());
    let nosense = audit(&bf, &ch, &scene, &cfg, &AuditScope::robust(&cfg).without_sensing()).unwrap();
    assert!(nosense.sensing.is_none());
    assert_eq!(nosense.qos.len(), 1);
}

fn ratio_strategy() -> impl Strategy<Value = (f64, f64)> {
    (1e-3f64..1e3, 0.0f64..8.0).prop_map(|(k0, l)| (k0, k0 * l.exp()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pinsker_bound_below_exact((k0, k1) in ratio_strategy()) {
        let s = stats(k0, k1);
        let pe = detection_error_exact(&s).unwrap();
        let kl = kl_divergence(&s);
        prop_assert!(kl.divergence >= 0.0);
        prop_assert!(kl.p_e_bound <= pe + 1e-9);
        prop_assert!((0.0..=1.0).contains(&pe));
    }

    #[test]
    fn kl_matches_quadrature((k0, k1) in ratio_strategy()) {
        let s = stats(k0, k1);
        prop_assert!((kl_divergence(&s).divergence - numeric_kl(k0, k1)).abs() < 1e-6);
    }

    #[test]
    fn ratio_cap_equivalent_to_divergence_budget(eps in 1e-4f64..0.5, l in 0.0f64..0.5) {
        let g = solve_gamma_cap(eps);
        let s = stats(1.0, l.exp());
        let by_ratio = s.z <= g;
        let by_kl = kl_divergence(&s).divergence <= 2.0 * eps * eps + 1e-10;
        if (s.z - g).abs() > 1e-9 {
            prop_assert_eq!(by_ratio, by_kl);
        }
    }

    #[test]
    fn rates_and_sensing_invariant_to_column_phase(seed in 0u64..1000, col in 0usize..4, phase in -PI..PI) {
        let cfg = small_cfg();
        let ch = generate_random_channels(&SystemConfig { rng_seed: seed, ..cfg.clone() }, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_mat(cfg.mt, cfg.streams(), &mut rng);
        let scene = SensingScene::standard(seed);
        let bf = BeamformerSolution::fully_digital(v.clone(), steering(0.2, cfg.mr));
        let mut v2 = v;
        let rotated = v2.column(col) * C64::from_polar(1.0, phase);
        v2.set_column(col, &rotated);
        let bf2 = BeamformerSolution::fully_digital(v2, bf.w.clone());
        let (o1, c1) = sinr_and_rates(&bf, &ch, &cfg);
        let (o2, c2) = sinr_and_rates(&bf2, &ch, &cfg);
        prop_assert!((c1 - c2).abs() < 1e-10);
        for (a, b) in o1.iter().zip(&o2) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let s1 = sensing_sinr(&bf, &scene, &cfg).unwrap();
        let s2 = sensing_sinr(&bf2, &scene, &cfg).unwrap();
        prop_assert!((s1 / s2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ball_samples_stay_inside(seed in 0u64..10_000, radius in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = random_mat(6, 1, &mut rng).column(0).into_owned();
        let x = sample_ball(&center, radius, &mut rng);
        prop_assert!((x - &center).norm() <= radius * (1.0 + 1e-12));
    }

    #[test]
    fn stats_are_ordered(seed in 0u64..1000) {
        let cfg = small_cfg();
        let ch = generate_random_channels(&SystemConfig { rng_seed: seed, ..cfg.clone() }, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bf = BeamformerSolution::fully_digital(random_mat(cfg.mt, cfg.streams(), &mut rng), steering(0.0, cfg.mr));
        let s = hypothesis_stats(&bf, &ch, &cfg);
        prop_assert!(s.kappa1 >= s.kappa0 && s.kappa0 >= cfg.noise_willie && s.z >= 1.0);
    }
}
