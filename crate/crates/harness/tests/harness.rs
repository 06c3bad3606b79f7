use std::process::Command;

use covert_isac::model::SystemConfig;
use covert_isac_harness::experiment::{run_trial, trial_seed};
use covert_isac_harness::output::{sig9, to_csv, CSV_HEADER};
use covert_isac_harness::*;

fn desk() -> BaseConfig {
    let mut b = BaseConfig::default();
    b.set("antennas", "16").unwrap();
    b.set("carols", "2").unwrap();
    b
}

fn spec(sweep: SweepVar, values: Vec<f64>, schemes: Vec<Scheme>) -> ExperimentSpec {
    ExperimentSpec {
        sweep,
        values,
        schemes,
        trials: 1,
        base: desk(),
        seed: 3,
        output: None,
        format: OutputFormat::Csv,
        timing: false,
    }
}

#[test]
fn config_file_round_trip() {
    let text = "# desk run\nantennas = 16\ncarols=2\nclutter_deg = -20, 45\nqos = 2 # bits\nsweep = qos\nvalues = 1,2\n\n";
    let (base, rest) = parse_config(text).unwrap();
    assert_eq!(base.system.mt, 16);
    assert_eq!(base.system.mr, 16);
    assert_eq!(base.system.u_carols, 2);
    assert_eq!(base.system.qos_carol, vec![2.0, 2.0]);
    assert_eq!(base.system.qos_willie, 2.0);
    assert_eq!(base.clutter_deg, vec![-20.0, 45.0]);
    assert_eq!(rest.get("sweep").map(String::as_str), Some("qos"));
    assert_eq!(rest.get("values").map(String::as_str), Some("1,2"));
}

#[test]
fn config_errors() {
    assert!(matches!(parse_config("warp = 9"), Err(HarnessError::Config(_))));
    assert!(matches!(parse_config("antennas = many"), Err(HarnessError::Config(_))));
    assert!(matches!(parse_config("antennas 16"), Err(HarnessError::Config(_))));
    let mut b = BaseConfig::default();
    b.delta_sq = -1.0;
    assert!(b.validate().is_err());
    let mut s = spec(SweepVar::Qos, vec![], vec![Scheme::Fdbf]);
    assert!(run_experiment(&s).is_err());
    s.values = vec![1.0];
    s.trials = 0;
    assert!(run_experiment(&s).is_err());
    let missing = std::path::Path::new("/nonexistent/dir/run.cfg");
    assert!(matches!(load_config(missing), Err(HarnessError::Io { .. })));
}

#[test]
fn names_parse_both_ways() {
    for s in Scheme::ALL {
        assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
    }
    assert!("SDR".parse::<Scheme>().is_err());
    assert_eq!("rfchains".parse::<SweepVar>().unwrap(), SweepVar::RfChains);
    assert_eq!("JSON".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
}

#[test]
fn sweep_values_apply() {
    let b = desk();
    assert_eq!(SweepVar::Antennas.apply(&b, 8.0).unwrap().system.mt, 8);
    assert_eq!(SweepVar::RfChains.apply(&b, 5.0).unwrap().system.n_rf, 5);
    assert_eq!(SweepVar::Carols.apply(&b, 3.0).unwrap().system.noise_carol.len(), 3);
    assert_eq!(SweepVar::Gamma.apply(&b, 12.0).unwrap().system.sensing_gamma_db, 12.0);
    assert_eq!(SweepVar::DeltaSq.apply(&b, 0.1).unwrap().delta_sq, 0.1);
    assert!(SweepVar::Antennas.apply(&b, 2.5).is_err());
}

#[test]
fn significant_digits() {
    assert_eq!(sig9(0.0), "0");
    assert_eq!(sig9(1.0), "1.00000000");
    assert_eq!(sig9(-29.999999999999996), "-30.0000000");
    assert_eq!(sig9(123456.789012), "123456.789");
    assert_eq!(sig9(1.5e-7), "1.50000000e-7");
    assert_eq!(sig9(f64::NAN), "nan");
    assert_eq!(sig9(f64::NEG_INFINITY), "-inf");
}

#[test]
fn qos_sweep_gives_one_row_per_point_and_falls() {
    let s = spec(SweepVar::Qos, (1..=6).map(f64::from).collect(), vec![Scheme::Fdbf]);
    let rows = run_experiment(&s).unwrap();
    assert_eq!(rows.len(), 6);
    let rate = |r: &ResultRow| if r.infeasible_count == r.trial_count { 0.0 } else { r.covert_rate_mean };
    for pair in rows.windows(2) {
        assert!(pair[0].sweep_value < pair[1].sweep_value);
        assert!(rate(&pair[1]) <= rate(&pair[0]) * (1.0 + 1e-3), "{pair:?}");
    }
    for r in rows.iter().filter(|r| r.infeasible_count < r.trial_count) {
        assert_eq!(r.audit_verdict, "pass");
        assert!(r.runtime_ms_mean.is_none());
    }
    let csv = to_csv(&rows).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec(SweepVar::Gamma, vec![8.0, 10.0], vec![Scheme::Zf, Scheme::Fdbf]);
    s.trials = 2;
    let mut texts = Vec::new();
    for k in 0..2 {
        s.output = Some(dir.path().join(format!("nested/run{k}.csv")));
        run_experiment(&s).unwrap();
        texts.push(std::fs::read(s.output.as_ref().unwrap()).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    let text = String::from_utf8(texts.remove(0)).unwrap();
    let first: Vec<&str> = text.lines().map(|l| l.split(',').next().unwrap()).skip(1).collect();
    assert_eq!(first, vec!["FDBF", "FDBF", "ZF", "ZF"]);
}

#[test]
fn json_output_is_an_array_of_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec(SweepVar::Eps, vec![0.01], vec![Scheme::Fdbf]);
    s.format = OutputFormat::Json;
    s.output = Some(dir.path().join("run.json"));
    run_experiment(&s).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(s.output.unwrap()).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["scheme"], "FDBF");
    assert_eq!(rows[0]["sweepVar"], "eps");
    assert_eq!(rows[0]["trial_count"], 1);
    assert!(rows[0]["covert_rate_mean"].as_f64().unwrap() > 0.0);
    assert!(rows[0]["runtime_ms_mean"].is_null());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let mut s = spec(SweepVar::Qos, vec![1.0], vec![Scheme::Mrt]);
    s.output = Some(blocker.join("out.csv"));
    assert!(matches!(run_experiment(&s), Err(HarnessError::Io { .. })));
}

#[test]
fn trials_share_channels_across_sweep_points() {
    assert_ne!(trial_seed(0, 0), trial_seed(0, 1));
    let b = desk();
    let a = run_trial(Scheme::Fdbf, &b, trial_seed(5, 0), false).unwrap().unwrap();
    let again = run_trial(Scheme::Fdbf, &b, trial_seed(5, 0), false).unwrap().unwrap();
    assert_eq!(a, again);
    assert!(a.audit_min_slack >= -1e-6);
}

#[test]
fn nominal_design_is_measured_on_the_true_channel() {
    let mut b = desk();
    b.delta_sq = 1.0;
    let nominal = run_trial(Scheme::Fdbf, &b, 1, false).unwrap().unwrap();
    let robust = run_trial(Scheme::RobustFdbf, &b, 1, false).unwrap().unwrap();
    // The estimate-based design is not covert at the truth; the robust one is.
    assert!(nominal.audit_min_slack < 0.0, "{}", nominal.audit_min_slack);
    assert!(robust.audit_min_slack >= -1e-6, "{}", robust.audit_min_slack);
}

#[test]
fn beampattern_peaks_at_target_and_notches_clutter() {
    let base = BaseConfig::default();
    let s = BeampatternSpec {
        base: base.clone(),
        schemes: vec![Scheme::Fdbf],
        clutter_powers_db: vec![0.0, 20.0, 40.0],
        seed: 0,
        output: None,
    };
    let rows = emit_beampattern(&s).unwrap();
    let samples = SystemConfig::default().angular_samples;
    assert_eq!(rows.len(), 3 * samples);
    let mut depths = Vec::new();
    for chunk in rows.chunks(samples) {
        let peak = chunk.iter().max_by(|a, b| a.gain_db.total_cmp(&b.gain_db)).unwrap();
        assert!((peak.angle_deg - base.target_deg).abs() <= 1.0 + 1e-9);
        assert!(peak.gain_db.abs() < 1e-12);
        let at = |deg: f64| chunk.iter().find(|r| (r.angle_deg - deg).abs() < 1e-6).unwrap().gain_db;
        depths.push(base.clutter_deg.iter().map(|&d| -at(d)).fold(f64::INFINITY, f64::min));
    }
    assert!(depths[0] < depths[1] && depths[1] < depths[2], "{depths:?}");
}

#[test]
fn beampattern_file_has_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bp.csv");
    let mut base = desk();
    base.system.angular_samples = 19;
    let s = BeampatternSpec { base, schemes: vec![Scheme::Mrt], clutter_powers_db: vec![], seed: 0, output: Some(path.clone()) };
    emit_beampattern(&s).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "scheme,clutter_power_db,angle_deg,gain_db");
    assert_eq!(text.lines().count(), 20);
}

#[test]
fn command_line_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("desk.cfg");
    std::fs::write(&cfg, "antennas = 16\ncarols = 2\nsweep = gamma\nvalues = 10\ntrials = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_covert-isac"))
        .args(["--config", cfg.to_str().unwrap(), "--schemes", "FDBF,MRT"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("scheme,sweepVar,sweepValue"));

    let bad = Command::new(env!("CARGO_BIN_EXE_covert-isac")).args(["--schemes", "nope"]).output().unwrap();
    assert!(!bad.status.success());
}
