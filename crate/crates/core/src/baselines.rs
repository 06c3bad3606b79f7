//! Comparison schemes: fixed zero-forcing or maximum-ratio overt beams with an
//! optimized covert beam, a two-stage hybrid fit of the fully-digital design,
//! and communication-only designs without the sensing requirement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fdbf::{
    fix_phases, sensing_matrix, solve_fdbf, update_receive_filter_fd, usable, FdbfOptions,
};
use crate::hbf::{ccd_phases, least_squares, random_phases, solve_hbf, HbfOptions};
use crate::linalg::{c, fro2, quad_form, CMat, CVec};
use crate::model::{
    audit, sinr_and_rates, solve_gamma_cap, steering, AuditScope, BeamformerSolution, ChannelSet,
    ConstraintAudit, PerformanceReport, SensingScene, SystemConfig,
};
use crate::numerics::{rank1_extract, solve_sdp, HermCoef, LinearFunctional, SdpProblem};

/// Fraction of the power budget reserved for Bob's beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    pub delta_share: f64,
}

impl PowerSplit {
    pub fn new(delta_share: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta_share) {
            return Err(Error::InvalidConfig(format!("power share {delta_share} outside [0, 1)")));
        }
        Ok(Self { delta_share })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OvertScheme {
    ZeroForcing,
    MaxRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    FullyDigital,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub solution: BeamformerSolution,
    pub report: PerformanceReport,
    pub audit: ConstraintAudit,
    /// Power share of the returned point (overt-beam baselines).
    pub delta_share: Option<f64>,
    /// `|V_RF V_D - V_FD|^2` after each alternation (two-stage fit).
    pub fit_history: Vec<f64>,
}

/// Channels of the Carols and Willie, one per column.
fn overt_channels(ch: &ChannelSet, cfg: &SystemConfig) -> CMat {
    ch.h.columns(0, cfg.bob()).into_owned()
}

/// Zero-forcing overt beams `H (H^H H)^{-1}` scaled to power `P (1 - delta)`.
pub fn zf_overt_beams(ch: &ChannelSet, cfg: &SystemConfig, split: PowerSplit) -> Result<CMat> {
    let h = overt_channels(ch, cfg);
    let gram = h.adjoint() * &h;
    let (vals, _) = crate::linalg::herm_eig(&gram);
    let top = vals.last().copied().unwrap_or(0.0);
    if vals.first().is_none_or(|&l| l <= 1e-12 * top) {
        return Err(Error::RankDeficient);
    }
    let inv = gram.try_inverse().ok_or(Error::RankDeficient)?;
    Ok(scale_to(&h * inv, cfg.total_power * (1.0 - split.delta_share)))
}

/// Maximum-ratio overt beams `H / |H|_F` scaled to power `P (1 - delta)`.
pub fn mrt_overt_beams(ch: &ChannelSet, cfg: &SystemConfig, split: PowerSplit) -> Result<CMat> {
    let h = overt_channels(ch, cfg);
    if fro2(&h) == 0.0 {
        return Err(Error::RankDeficient);
    }
    Ok(scale_to(h, cfg.total_power * (1.0 - split.delta_share)))
}

fn scale_to(v: CMat, power: f64) -> CMat {
    let n = fro2(&v);
    v * c((power / n).sqrt())
}

/// Covert-beam relaxation with the overt beams fixed: the interference at Bob is
/// a constant, so the rate is maximized by maximizing `Tr(S_B F)`.
pub fn build_covert_beam_problem(
    overt: &CMat,
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    w: &CVec,
    gamma_cap: f64,
) -> Option<SdpProblem> {
    let n_overt = overt.ncols();
    let gain = |h: &CVec, i: usize| h.dotc(&overt.column(i)).norm_sqr();
    let mut ineq = vec![(
        LinearFunctional::new().block(0, HermCoef::Identity(1.0)),
        cfg.total_power - fro2(overt),
    )];
    for u in 0..n_overt {
        let hu = ch.column(u);
        let t = cfg.sinr_target(u);
        let interference: f64 = (0..n_overt).filter(|&i| i != u).map(|i| gain(&hu, i)).sum();
        let rhs = gain(&hu, u) - t * (interference + cfg.noise(u));
        if rhs < 0.0 {
            return None;
        }
        ineq.push((LinearFunctional::new().block(0, HermCoef::outer(&hu, t)), rhs));
    }
    let hw = ch.willie();
    let leak: f64 = (0..n_overt).map(|i| gain(&hw, i)).sum();
    ineq.push((
        LinearFunctional::new().block(0, HermCoef::outer(&hw, 1.0)),
        (gamma_cap - 1.0) * (leak + cfg.noise_willie),
    ));
    let m = sensing_matrix(w, scene, cfg);
    let fixed: f64 = (0..n_overt).map(|i| quad_form(&overt.column(i).into_owned(), &m)).sum();
    ineq.push((
        LinearFunctional::new().block(0, HermCoef::Dense(m)),
        -fixed - cfg.sensing_gamma() * cfg.noise_radar * w.norm_squared(),
    ));
    Some(SdpProblem {
        block_dims: vec![cfg.mt],
        scalar_vars: 0,
        objective: LinearFunctional::new().block(0, HermCoef::outer(&ch.bob(), -1.0)),
        eq_constraints: Vec::new(),
        ineq_constraints: ineq,
        lmis: Vec::new(),
    })
}

fn covert_beam(problem: &SdpProblem, rank1_tol: f64) -> Option<CVec> {
    let sol = solve_sdp(problem);
    if !usable(sol.status, sol.primal_residual, sol.gap) {
        return None;
    }
    let (v, ratio) = match rank1_extract(&sol.blocks[0]) {
        Ok(x) => x,
        Err(_) => return Some(CVec::zeros(problem.block_dims[0])),
    };
    if ratio <= rank1_tol {
        return Some(v);
    }
    let u = &v / c(v.norm());
    let fixed = solve_sdp(&problem.restrict_block(0, &u));
    if !usable(fixed.status, fixed.primal_residual, fixed.gap) {
        return None;
    }
    Some(u * c(fixed.blocks[0][(0, 0)].re.max(0.0).sqrt()))
}

fn with_covert(overt: &CMat, vb: &CVec) -> CMat {
    let mut v = CMat::zeros(overt.nrows(), overt.ncols() + 1);
    v.columns_mut(0, overt.ncols()).copy_from(overt);
    v.set_column(overt.ncols(), vb);
    v
}

/// Alternate the receive filter and the covert beam for fixed overt beams.
fn design_at_split(
    overt: &CMat,
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    opts: &FdbfOptions,
    gamma_cap: f64,
) -> Option<(BeamformerSolution, f64)> {
    let hb = ch.bob();
    let spare = (cfg.total_power - fro2(overt)).max(0.0);
    let mut vb = &hb * c(spare.sqrt() / hb.norm());
    let mut best: Option<(BeamformerSolution, f64)> = None;
    let mut w = steering(scene.target_angle, cfg.mr);
    for _ in 0..opts.max_outer_iters.max(1) {
        let v = with_covert(overt, &vb);
        if opts.sensing {
            w = update_receive_filter_fd(&v, scene, cfg).ok()?;
        }
        let problem = build_covert_beam_problem(overt, ch, scene, cfg, &w, gamma_cap)?;
        vb = covert_beam(&problem, opts.rank1_tol)?;
        let mut v = with_covert(overt, &vb);
        fix_phases(&mut v, &ch.h);
        let bf = BeamformerSolution::fully_digital(v, w.clone());
        let (_, rate) = sinr_and_rates(&bf, ch, cfg);
        let prev = best.as_ref().map(|b| b.1);
        best = Some((bf, rate));
        if let Some(p) = prev {
            if (rate - p).abs() <= opts.rate_tol * p.abs().max(1e-12) {
                break;
            }
        }
    }
    best
}

/// Overt beams fixed by `scheme`, covert beam and receive filter optimized, and the
/// power share searched from the top: a coarse scan finds the largest feasible
/// share on a 0.1 grid, then bisection refines the boundary above it.
pub fn solve_baseline_covert(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    scheme: OvertScheme,
    opts: &FdbfOptions,
) -> Result<BaselineOutcome> {
    cfg.validate()?;
    ch.check(cfg)?;
    scene.validate()?;
    let gamma_cap = solve_gamma_cap(cfg.covert_eps);
    let scope = if opts.sensing { AuditScope::nominal(cfg) } else { AuditScope::nominal(cfg).without_sensing() };
    let evaluate = |delta: f64| -> Result<Option<(BeamformerSolution, f64)>> {
        let split = PowerSplit::new(delta)?;
        let overt = match scheme {
            OvertScheme::ZeroForcing => zf_overt_beams(ch, cfg, split)?,
            OvertScheme::MaxRatio => mrt_overt_beams(ch, cfg, split)?,
        };
        let Some((bf, rate)) = design_at_split(&overt, ch, scene, cfg, opts, gamma_cap) else {
            return Ok(None);
        };
        let a = audit(&bf, ch, scene, cfg, &scope)?;
        Ok(a.passes(1e-6).then_some((bf, rate)))
    };

    let top = 0.99;
    let grid: Vec<f64> = std::iter::once(top).chain((0..=9).rev().map(|k| k as f64 * 0.1)).collect();
    let mut found: Option<(f64, BeamformerSolution, f64)> = None;
    let mut above = None;
    for (k, &d) in grid.iter().enumerate() {
        if let Some((bf, rate)) = evaluate(d)? {
            found = Some((d, bf, rate));
            above = (k > 0).then(|| grid[k - 1]);
            break;
        }
    }
    let (mut lo, mut bf, mut rate) =
        found.ok_or_else(|| Error::InfeasibleDesign("no feasible power share".into()))?;
    if let Some(mut hi) = above {
        for _ in 0..30 {
            if hi - lo < 1e-4 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match evaluate(mid)? {
                Some((b, r)) => {
                    lo = mid;
                    if r >= rate {
                        bf = b;
                        rate = r;
                    }
                }
                None => hi = mid,
            }
        }
    }
    let report = PerformanceReport::evaluate(&bf, ch, scene, cfg, opts.pfa)?;
    let audit = audit(&bf, ch, scene, cfg, &scope)?;
    Ok(BaselineOutcome { solution: bf, report, audit, delta_share: Some(lo), fit_history: Vec::new() })
}

/// Fully-digital design followed by an alternating phase / least-squares fit of
/// `V_RF V_D` to it. Constraints are not re-imposed after the fit.
pub fn solve_ts_hbf(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    opts: &FdbfOptions,
) -> Result<BaselineOutcome> {
    let fd = solve_fdbf(ch, scene, cfg, opts)?;
    let target = fd.solution.v_full.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x75f1_7a3c_9e02);
    let mut v_rf = random_phases(cfg.mt, cfg.n_rf, &mut rng);
    let (mut v_d, _) = least_squares(&v_rf, &target);
    let mut history = vec![fro2(&(&v_rf * &v_d - &target))];
    for _ in 0..200 {
        v_rf = ccd_phases(&v_rf, &v_d, &target, 100, 1e-6).0;
        v_d = least_squares(&v_rf, &target).0;
        let obj = fro2(&(&v_rf * &v_d - &target));
        let prev = *history.last().unwrap_or(&f64::INFINITY);
        history.push(obj);
        if (prev - obj).abs() < 1e-8 {
            break;
        }
    }
    let pw = fro2(&(&v_rf * &v_d));
    if pw > cfg.total_power {
        v_d *= c((cfg.total_power / pw).sqrt());
    }
    let v = &v_rf * &v_d;
    let w = if opts.sensing { update_receive_filter_fd(&v, scene, cfg)? } else { fd.solution.w.clone() };
    let solution = BeamformerSolution::hybrid(v_rf, v_d, w);
    let report = PerformanceReport::evaluate(&solution, ch, scene, cfg, opts.pfa)?;
    let scope = if opts.sensing { AuditScope::nominal(cfg) } else { AuditScope::nominal(cfg).without_sensing() };
    let audit = audit(&solution, ch, scene, cfg, &scope)?;
    Ok(BaselineOutcome { solution, report, audit, delta_share: None, fit_history: history })
}

/// Proposed designs with the sensing requirement removed; the reported filter is
/// the matched filter toward the target, for the beampattern only.
pub fn solve_comm_only(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    structure: Structure,
) -> Result<BaselineOutcome> {
    let (solution, report, audit) = match structure {
        Structure::FullyDigital => {
            let o = solve_fdbf(ch, scene, cfg, &FdbfOptions { sensing: false, ..Default::default() })?;
            (o.solution, o.report, o.audit)
        }
        Structure::Hybrid => {
            let o = solve_hbf(ch, scene, cfg, &HbfOptions { sensing: false, ..Default::default() }, false)?;
            (o.solution, o.report, o.audit)
        }
    };
    Ok(BaselineOutcome { solution, report, audit, delta_share: None, fit_history: Vec::new() })
}
