//! Sweeps over one configuration axis, Monte-Carlo averaged over channel draws.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use covert_isac::baselines::{solve_baseline_covert, solve_comm_only, solve_ts_hbf, OvertScheme, Structure};
use covert_isac::fdbf::{solve_fdbf, solve_robust_fdbf, FdbfOptions};
use covert_isac::hbf::{solve_hbf, HbfOptions};
use covert_isac::model::{
    audit, generate_random_channels, lin_to_db, AuditScope, BeamformerSolution, ChannelSet,
    PerformanceReport, SensingScene, SystemConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::BaseConfig;
use crate::error::{HarnessError, Result};

/// Relative constraint violation tolerated in a row marked as passing.
pub const AUDIT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Fdbf,
    Hbf,
    Zf,
    Mrt,
    Ts,
    CommOnlyFd,
    CommOnlyHbf,
    RobustFdbf,
    RobustHbf,
}

impl Scheme {
    pub const ALL: [Scheme; 9] = [
        Scheme::Fdbf,
        Scheme::Hbf,
        Scheme::Zf,
        Scheme::Mrt,
        Scheme::Ts,
        Scheme::CommOnlyFd,
        Scheme::CommOnlyHbf,
        Scheme::RobustFdbf,
        Scheme::RobustHbf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Fdbf => "FDBF",
            Scheme::Hbf => "HBF",
            Scheme::Zf => "ZF",
            Scheme::Mrt => "MRT",
            Scheme::Ts => "TS",
            Scheme::CommOnlyFd => "CommOnlyFD",
            Scheme::CommOnlyHbf => "CommOnlyHBF",
            Scheme::RobustFdbf => "RobustFDBF",
            Scheme::RobustHbf => "RobustHBF",
        }
    }

    fn robust(self) -> bool {
        matches!(self, Scheme::RobustFdbf | Scheme::RobustHbf)
    }

    fn sensing(self) -> bool {
        !matches!(self, Scheme::CommOnlyFd | Scheme::CommOnlyHbf)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| HarnessError::Config(format!("unknown scheme {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVar {
    Qos,
    Eps,
    Gamma,
    Antennas,
    RfChains,
    Carols,
    DeltaSq,
}

impl SweepVar {
    const ALL: [SweepVar; 7] = [
        SweepVar::Qos,
        SweepVar::Eps,
        SweepVar::Gamma,
        SweepVar::Antennas,
        SweepVar::RfChains,
        SweepVar::Carols,
        SweepVar::DeltaSq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Qos => "qos",
            SweepVar::Eps => "eps",
            SweepVar::Gamma => "gamma",
            SweepVar::Antennas => "antennas",
            SweepVar::RfChains => "rfChains",
            SweepVar::Carols => "carols",
            SweepVar::DeltaSq => "deltaSq",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &BaseConfig, value: f64) -> Result<BaseConfig> {
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(HarnessError::Config(format!("{} must be a positive integer, got {value}", self.name())))
            }
        };
        let mut b = base.clone();
        let s = &mut b.system;
        match self {
            SweepVar::Qos => *s = s.clone().with_qos(value),
            SweepVar::Eps => s.covert_eps = value,
            SweepVar::Gamma => s.sensing_gamma_db = value,
            SweepVar::Antennas => {
                let n = count()?;
                *s = s.clone().with_antennas(n, n);
            }
            SweepVar::RfChains => s.n_rf = count()?,
            SweepVar::Carols => *s = s.clone().with_carols(count()?),
            SweepVar::DeltaSq => b.delta_sq = value,
        }
        b.validate()?;
        Ok(b)
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVar {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        SweepVar::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| HarnessError::Config(format!("unknown sweep variable {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(HarnessError::Config(format!("unknown format {s}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub sweep: SweepVar,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    /// Channel realizations per sweep point.
    pub trials: usize,
    pub base: BaseConfig,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    /// Record wall-clock time per design. Off by default so that output files
    /// are reproducible byte for byte.
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(HarnessError::Config("sweep values are empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(HarnessError::Config("no schemes selected".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        self.base.validate()?;
        for &v in &self.values {
            self.sweep.apply(&self.base, v)?;
        }
        Ok(())
    }
}

/// Seed of trial `k`; independent of the sweep value so every point sees the
/// same channel draws.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add((trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Metrics of one feasible design, measured on the true channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub report: PerformanceReport,
    pub audit_min_slack: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: String,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub trial_count: usize,
    pub infeasible_count: usize,
    pub covert_rate_mean: f64,
    pub covert_rate_std: f64,
    pub overt_rate_min_mean: f64,
    pub p_e_mean: f64,
    pub kl_mean: f64,
    pub sensing_sinr_db_mean: f64,
    pub pd_mean: f64,
    /// False-alarm rate behind `pd_mean`.
    pub pfa: f64,
    pub runtime_ms_mean: Option<f64>,
    /// Smallest relative constraint slack over the feasible trials.
    pub audit_min_slack: f64,
    /// `pass`, `fail`, or `none` when no trial was feasible.
    pub audit_verdict: String,
}

fn channels(base: &BaseConfig, seed: u64) -> Result<(SystemConfig, ChannelSet, SensingScene)> {
    let cfg = SystemConfig { rng_seed: seed, ..base.system.clone() };
    let ch = generate_random_channels(&cfg, base.paths)?;
    Ok((cfg, ch, base.scene(seed)))
}

fn design(
    scheme: Scheme,
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    pfa: f64,
) -> covert_isac::Result<BeamformerSolution> {
    let fd = FdbfOptions { pfa, ..Default::default() };
    let hb = HbfOptions { pfa, ..Default::default() };
    Ok(match scheme {
        Scheme::Fdbf => solve_fdbf(ch, scene, cfg, &fd)?.solution,
        Scheme::Hbf => solve_hbf(ch, scene, cfg, &hb, false)?.solution,
        Scheme::Zf => solve_baseline_covert(ch, scene, cfg, OvertScheme::ZeroForcing, &fd)?.solution,
        Scheme::Mrt => solve_baseline_covert(ch, scene, cfg, OvertScheme::MaxRatio, &fd)?.solution,
        Scheme::Ts => solve_ts_hbf(ch, scene, cfg, &fd)?.solution,
        Scheme::CommOnlyFd => solve_comm_only(ch, scene, cfg, Structure::FullyDigital)?.solution,
        Scheme::CommOnlyHbf => solve_comm_only(ch, scene, cfg, Structure::Hybrid)?.solution,
        Scheme::RobustFdbf => solve_robust_fdbf(ch, scene, cfg, &fd)?.solution,
        Scheme::RobustHbf => solve_hbf(ch, scene, cfg, &hb, true)?.solution,
    })
}

/// Design one instance and measure it. `Ok(None)` is an infeasible design.
///
/// With `delta_sq > 0` the true Willie channel is drawn from the uncertainty
/// ball; robust schemes see the estimate and the radius, the others design on
/// the estimate as if it were exact. Every scheme is measured on the truth.
pub fn run_trial(scheme: Scheme, base: &BaseConfig, seed: u64, timing: bool) -> Result<Option<TrialMetrics>> {
    let (cfg, nominal, scene) = channels(base, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xde17_a5a9);
    let truth = nominal.with_willie_error(base.delta_sq.sqrt(), &mut rng);
    let design_ch = if scheme.robust() {
        truth.clone()
    } else {
        let mut h = truth.h.clone();
        h.set_column(cfg.willie(), &truth.willie_est);
        ChannelSet::new(h)
    };
    let start = Instant::now();
    let solution = match design(scheme, &design_ch, &scene, &cfg, base.pfa) {
        Ok(s) => s,
        Err(covert_isac::Error::InvalidConfig(m)) => return Err(HarnessError::Config(m)),
        Err(_) => return Ok(None),
    };
    let runtime_ms = if timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let report = PerformanceReport::evaluate(&solution, &truth, &scene, &cfg, base.pfa)?;
    let scope = if scheme.robust() { AuditScope::robust(&cfg) } else { AuditScope::nominal(&cfg) };
    let scope = if scheme.sensing() { scope } else { scope.without_sensing() };
    let audit_min_slack = audit(&solution, &truth, &scene, &cfg, &scope)?.min_slack();
    Ok(Some(TrialMetrics { report, audit_min_slack, runtime_ms }))
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Average the trials of one (scheme, sweep value) point.
pub fn aggregate(
    scheme: Scheme,
    sweep: SweepVar,
    value: f64,
    pfa: f64,
    timing: bool,
    trials: &[Option<TrialMetrics>],
) -> ResultRow {
    let ok: Vec<&TrialMetrics> = trials.iter().flatten().collect();
    let col = |f: &dyn Fn(&TrialMetrics) -> f64| ok.iter().map(|t| f(t)).collect::<Vec<f64>>();
    let rates = col(&|t| t.report.covert_rate);
    let min_slack = ok.iter().map(|t| t.audit_min_slack).fold(f64::INFINITY, f64::min);
    let verdict = if ok.is_empty() {
        "none"
    } else if min_slack >= -AUDIT_TOL {
        "pass"
    } else {
        "fail"
    };
    ResultRow {
        scheme: scheme.name().to_string(),
        sweep_var: sweep.name().to_string(),
        sweep_value: value,
        trial_count: trials.len(),
        infeasible_count: trials.len() - ok.len(),
        covert_rate_mean: mean(&rates),
        covert_rate_std: std_dev(&rates),
        overt_rate_min_mean: mean(&col(&|t| t.report.min_overt_rate())),
        p_e_mean: mean(&col(&|t| t.report.p_e)),
        kl_mean: mean(&col(&|t| t.report.kl_div)),
        sensing_sinr_db_mean: mean(&col(&|t| lin_to_db(t.report.sensing_sinr))),
        pd_mean: mean(&col(&|t| t.report.detection_prob)),
        pfa,
        runtime_ms_mean: timing.then(|| mean(&col(&|t| t.runtime_ms))),
        audit_min_slack: if ok.is_empty() { f64::NAN } else { min_slack },
        audit_verdict: verdict.to_string(),
    }
}

/// Run every (scheme, value, trial) design on the worker pool and return one
/// row per (scheme, value), ordered by scheme then by value.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let bases: Vec<BaseConfig> =
        spec.values.iter().map(|&v| spec.sweep.apply(&spec.base, v)).collect::<Result<_>>()?;
    let mut schemes = spec.schemes.clone();
    schemes.sort();
    schemes.dedup();
    let jobs: Vec<(usize, usize, usize)> = (0..schemes.len())
        .flat_map(|s| (0..bases.len()).flat_map(move |v| (0..spec.trials).map(move |t| (s, v, t))))
        .collect();
    let results: Vec<Option<TrialMetrics>> = jobs
        .par_iter()
        .map(|&(s, v, t)| run_trial(schemes[s], &bases[v], trial_seed(spec.seed, t), spec.timing))
        .collect::<Result<_>>()?;
    let mut rows: Vec<ResultRow> = results
        .chunks(spec.trials)
        .zip(jobs.iter().step_by(spec.trials))
        .map(|(chunk, &(s, v, _))| {
            aggregate(schemes[s], spec.sweep, spec.values[v], spec.base.pfa, spec.timing, chunk)
        })
        .collect();
    rows.sort_by(|a, b| {
        let sa: Scheme = a.scheme.parse().expect("known scheme");
        let sb: Scheme = b.scheme.parse().expect("known scheme");
        sa.cmp(&sb).then(a.sweep_value.total_cmp(&b.sweep_value))
    });
    if let Some(path) = &spec.output {
        crate::output::write_rows(&rows, path, spec.format)?;
    }
    Ok(rows)
}
