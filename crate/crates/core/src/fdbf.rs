//! Fully-digital design: alternate the receive filter (generalized Rayleigh
//! quotient) with a semidefinite relaxation of the beam design, made linear by
//! the Charnes-Cooper substitution `F_bar = alpha F`.

use crate::error::{Error, Result};
use crate::linalg::{c, fro2, CMat, CVec, C64};
use crate::model::{
    audit, response, sinr_and_rates, solve_gamma_cap, steering, AuditScope, BeamformerSolution,
    ChannelSet, ConstraintAudit, PerformanceReport, SensingScene, SystemConfig,
};
use crate::numerics::{
    generalized_rayleigh_max, rank1_extract, solve_sdp, HermCoef, LinearFunctional, Lmi,
    SdpProblem, SdpStatus,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FdbfOptions {
    pub max_outer_iters: usize,
    /// Stop when the relative covert-rate change falls below this.
    pub rate_tol: f64,
    /// Acceptable `lambda2 / lambda1` of each recovered block.
    pub rank1_tol: f64,
    /// Include the sensing SINR constraint and update the receive filter.
    pub sensing: bool,
    /// False-alarm probability used for the reported detection probability.
    pub pfa: f64,
}

impl Default for FdbfOptions {
    fn default() -> Self {
        Self { max_outer_iters: 50, rate_tol: 1e-4, rank1_tol: 1e-6, sensing: true, pfa: 1e-4 }
    }
}

/// Which rows the relaxed problem carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SdrSpec {
    pub sensing: bool,
    /// Rate requirement for Willie's overt stream.
    pub willie_qos: bool,
    /// Covertness over the CSI uncertainty ball (LMI) instead of at the estimate.
    pub robust: bool,
}

impl SdrSpec {
    pub const NOMINAL: SdrSpec = SdrSpec { sensing: true, willie_qos: true, robust: false };
    pub const ROBUST: SdrSpec = SdrSpec { sensing: true, willie_qos: false, robust: true };
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdbfIteration {
    pub iteration: usize,
    /// Optimal value of the relaxation (Bob's SINR).
    pub sdp_objective: f64,
    pub sdp_status: SdpStatus,
    pub sdp_iterations: usize,
    pub alpha: f64,
    /// `lambda2 / lambda1` of each block of the relaxation.
    pub rank1_ratios: Vec<f64>,
    /// Blocks above `rank1_tol` that were re-solved along their principal direction.
    pub restored_blocks: Vec<usize>,
    pub covert_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdbfOutcome {
    pub solution: BeamformerSolution,
    pub report: PerformanceReport,
    pub audit: ConstraintAudit,
    pub trace: Vec<FdbfIteration>,
}

/// Target and clutter-plus-noise covariance matrices seen by the receive filter.
pub(crate) fn filter_matrices(v: &CMat, scene: &SensingScene, cfg: &SystemConfig) -> (CMat, CMat) {
    let echo = |angle: f64| {
        let av = response(angle, cfg.mt, cfg.mr) * v;
        &av * av.adjoint()
    };
    let xi = echo(scene.target_angle) * c(scene.target_amp.norm_sqr());
    let mut lambda = CMat::identity(cfg.mr, cfg.mr) * c(cfg.noise_radar);
    for cl in &scene.clutters {
        lambda += echo(cl.angle) * c(cl.amp.norm_sqr());
    }
    (xi, lambda)
}

/// Receive filter maximizing the sensing SINR for fixed beams.
pub fn update_receive_filter_fd(
    v_full: &CMat,
    scene: &SensingScene,
    cfg: &SystemConfig,
) -> Result<CVec> {
    if fro2(v_full) == 0.0 {
        return Err(Error::InvalidFilter);
    }
    let (xi, lambda) = filter_matrices(v_full, scene, cfg);
    generalized_rayleigh_max(&xi, &lambda)
}

/// `gamma * sum_q Phi_q - Phi_0` with `Phi_q = |s_q|^2 A_q^H w w^H A_q`, and `|w|^2`.
pub(crate) fn sensing_matrix(w: &CVec, scene: &SensingScene, cfg: &SystemConfig) -> CMat {
    let gamma = cfg.sensing_gamma();
    let phi = |angle: f64, amp: C64| {
        let at = steering(angle, cfg.mt);
        let g = steering(angle, cfg.mr).dotc(w).norm_sqr() * amp.norm_sqr();
        &at * at.adjoint() * c(g)
    };
    let mut m = -phi(scene.target_angle, scene.target_amp);
    for cl in &scene.clutters {
        m += phi(cl.angle, cl.amp) * c(gamma);
    }
    m
}

/// Relaxation with the nominal covertness row.
pub fn build_sdr_problem(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    w: &CVec,
    gamma_cap: f64,
) -> SdpProblem {
    build_sdr_problem_with(ch, scene, cfg, w, gamma_cap, &SdrSpec::NOMINAL)
}

/// Relaxation with the covertness row replaced by the S-procedure LMI.
pub fn build_robust_sdr_problem(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    w: &CVec,
    gamma_cap: f64,
) -> SdpProblem {
    build_sdr_problem_with(ch, scene, cfg, w, gamma_cap, &SdrSpec::ROBUST)
}

/// Blocks `0..U+2` are `alpha F_i`; scalar 0 is `alpha`, scalar 1 (robust) is the
/// S-procedure multiplier. The objective is `-Tr(S_B F_B)` (minimized).
pub fn build_sdr_problem_with(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    w: &CVec,
    gamma_cap: f64,
    spec: &SdrSpec,
) -> SdpProblem {
    let n = cfg.streams();
    let (willie, bob) = (cfg.willie(), cfg.bob());
    let hb = ch.bob();
    let hw = if spec.robust { ch.willie_est.clone() } else { ch.willie() };
    let all = |coef: &HermCoef| {
        let mut f = LinearFunctional::new();
        for i in 0..n {
            f = f.block(i, coef.clone());
        }
        f
    };

    let objective = LinearFunctional::new().block(bob, HermCoef::outer(&hb, -1.0));
    let mut ineq = Vec::new();

    // Transmit power.
    ineq.push((all(&HermCoef::Identity(1.0)).scalar(0, -cfg.total_power), 0.0));

    // Overt rate requirements.
    let overt_users: Vec<usize> = if spec.willie_qos { (0..=willie).collect() } else { (0..willie).collect() };
    for &u in &overt_users {
        let t = cfg.sinr_target(u);
        let hu = ch.column(u);
        let mut f = LinearFunctional::new();
        for i in 0..n {
            let k = if i == u { t - (t + 1.0) } else { t };
            f = f.block(i, HermCoef::outer(&hu, k));
        }
        ineq.push((f.scalar(0, t * cfg.noise(u)), 0.0));
    }

    // Covertness at the channel estimate.
    let mut lmis = Vec::new();
    let mut scalar_vars = 1;
    if spec.robust {
        scalar_vars = 2;
        let d = cfg.mt + 1;
        let mut e = CMat::zeros(cfg.mt, d);
        for k in 0..cfg.mt {
            e[(k, k)] = c(1.0);
            e[(k, cfg.mt)] = hw[k];
        }
        let mut block_terms = vec![(bob, -1.0, e.clone())];
        for i in 0..=willie {
            block_terms.push((i, gamma_cap - 1.0, e.clone()));
        }
        let mut eta = CMat::identity(d, d);
        eta[(cfg.mt, cfg.mt)] = c(-ch.willie_radius * ch.willie_radius);
        let mut alpha = CMat::zeros(d, d);
        alpha[(cfg.mt, cfg.mt)] = c((gamma_cap - 1.0) * cfg.noise_willie);
        lmis.push(Lmi {
            dim: d,
            constant: CMat::zeros(d, d),
            block_terms,
            scalar_terms: vec![(1, eta), (0, alpha)],
        });
    } else {
        let mut f = LinearFunctional::new().block(bob, HermCoef::outer(&hw, 1.0));
        for i in 0..=willie {
            f = f.block(i, HermCoef::outer(&hw, 1.0 - gamma_cap));
        }
        ineq.push((f.scalar(0, (1.0 - gamma_cap) * cfg.noise_willie), 0.0));
    }

    // Sensing SINR.
    if spec.sensing {
        let m = sensing_matrix(w, scene, cfg);
        let f = all(&HermCoef::Dense(m))
            .scalar(0, cfg.sensing_gamma() * cfg.noise_radar * w.norm_squared());
        ineq.push((f, 0.0));
    }

    // Normalization of Bob's interference-plus-noise.
    let mut norm = LinearFunctional::new().scalar(0, cfg.noise_bob);
    for i in 0..=willie {
        norm = norm.block(i, HermCoef::outer(&hb, 1.0));
    }

    SdpProblem {
        block_dims: vec![cfg.mt; n],
        scalar_vars,
        objective,
        eq_constraints: vec![(norm, 1.0)],
        ineq_constraints: ineq,
        lmis,
    }
}

/// MRT columns scaled to the full power budget.
pub(crate) fn mrt_start(ch: &ChannelSet, cfg: &SystemConfig) -> CMat {
    let norm = fro2(&ch.h).sqrt();
    &ch.h * c(cfg.total_power.sqrt() / norm)
}

/// Rotate each beam so that `h_i^H v_i` is real and nonnegative.
pub(crate) fn fix_phases(v: &mut CMat, h: &CMat) {
    for i in 0..v.ncols() {
        let g = h.column(i).dotc(&v.column(i));
        if g.norm() > 0.0 {
            let rot = g.conj() / g.norm();
            let mut col = v.column_mut(i);
            col *= rot;
        }
    }
}

struct Recovered {
    v: CMat,
    ratios: Vec<f64>,
    alpha: f64,
}

fn recover(blocks: &[CMat], alpha: f64, cfg: &SystemConfig, h: &CMat) -> Result<Recovered> {
    if !(alpha > 0.0) {
        return Err(Error::InfeasibleDesign("Charnes-Cooper scale is not positive".into()));
    }
    let mut v = CMat::zeros(cfg.mt, cfg.streams());
    let mut ratios = Vec::with_capacity(cfg.streams());
    for (i, blk) in blocks.iter().enumerate() {
        match rank1_extract(&(blk / c(alpha))) {
            Ok((col, ratio)) => {
                v.set_column(i, &col);
                ratios.push(ratio);
            }
            Err(Error::ZeroMatrix) => ratios.push(0.0),
            Err(e) => return Err(e),
        }
    }
    fix_phases(&mut v, h);
    Ok(Recovered { v, ratios, alpha })
}

/// Re-solve with each listed block fixed to its principal direction, which makes
/// the recovered beams exactly feasible when the relaxation is not tight. When
/// fixing all blocks at once is infeasible, they are fixed one at a time, each
/// direction taken from the latest re-solve.
fn restore_rank_one(
    problem: &SdpProblem,
    v: &CMat,
    blocks: &[usize],
    cfg: &SystemConfig,
    h: &CMat,
) -> Result<CMat> {
    let unit = |col: CVec| {
        let n = col.norm();
        col / c(n)
    };
    let mut restricted = problem.clone();
    let mut dirs = Vec::new();
    for &b in blocks {
        let u = unit(v.column(b).into_owned());
        restricted = restricted.restrict_block(b, &u);
        dirs.push((b, u));
    }
    let mut sol = solve_sdp(&restricted);
    if !usable(sol.status, sol.primal_residual, sol.gap) && blocks.len() > 1 {
        restricted = problem.clone();
        dirs.clear();
        let mut current = None;
        for &b in blocks {
            let u = match &current {
                None => unit(v.column(b).into_owned()),
                Some(prev) => unit(rank1_extract(&prev)?.0),
            };
            restricted = restricted.restrict_block(b, &u);
            dirs.push((b, u));
            sol = solve_sdp(&restricted);
            if !usable(sol.status, sol.primal_residual, sol.gap) {
                break;
            }
            current = blocks.iter().skip_while(|&&x| x != b).nth(1).map(|&n| sol.blocks[n].clone());
        }
    }
    if !usable(sol.status, sol.primal_residual, sol.gap) {
        return Err(Error::InfeasibleDesign(format!("rank-one restoration status {:?}", sol.status)));
    }
    let alpha = sol.scalars[0];
    let mut full: Vec<CMat> = sol.blocks.clone();
    for (b, u) in &dirs {
        let t = sol.blocks[*b][(0, 0)].re.max(0.0);
        full[*b] = u * u.adjoint() * c(t);
    }
    Ok(recover(&full, alpha, cfg, h)?.v)
}

/// An SDP that stopped at the iteration cap is still used when it is accurate.
pub(crate) fn usable(status: SdpStatus, residual: f64, gap: f64) -> bool {
    match status {
        SdpStatus::Optimal => true,
        SdpStatus::MaxIter | SdpStatus::Stalled => residual < 1e-7 && gap < 1e-6,
        _ => false,
    }
}

fn run(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    opts: &FdbfOptions,
    spec: SdrSpec,
) -> Result<FdbfOutcome> {
    cfg.validate()?;
    ch.check(cfg)?;
    scene.validate()?;
    let gamma_cap = solve_gamma_cap(cfg.covert_eps);
    let mut v = mrt_start(ch, cfg);
    let mut w = steering(scene.target_angle, cfg.mr);
    let mut trace: Vec<FdbfIteration> = Vec::new();
    let mut best: Option<(CMat, CVec)> = None;

    for it in 0..opts.max_outer_iters.max(1) {
        if spec.sensing {
            w = update_receive_filter_fd(&v, scene, cfg)?;
        }
        let problem = build_sdr_problem_with(ch, scene, cfg, &w, gamma_cap, &spec);
        let sol = solve_sdp(&problem);
        if !usable(sol.status, sol.primal_residual, sol.gap) {
            if best.is_some() && matches!(sol.status, SdpStatus::MaxIter | SdpStatus::Stalled) {
                break;
            }
            return Err(Error::InfeasibleDesign(format!("relaxation status {:?}", sol.status)));
        }
        let rec = recover(&sol.blocks, sol.scalars[0], cfg, &ch.h)?;
        let restored: Vec<usize> =
            (0..cfg.streams()).filter(|&i| rec.ratios[i] > opts.rank1_tol).collect();
        v = if restored.is_empty() {
            rec.v.clone()
        } else {
            restore_rank_one(&problem, &rec.v, &restored, cfg, &ch.h)?
        };
        let bf = BeamformerSolution::fully_digital(v.clone(), w.clone());
        let (_, rate) = sinr_and_rates(&bf, ch, cfg);
        let prev = trace.last().map(|t| t.covert_rate);
        trace.push(FdbfIteration {
            iteration: it,
            sdp_objective: -sol.objective,
            sdp_status: sol.status,
            sdp_iterations: sol.iterations,
            alpha: rec.alpha,
            rank1_ratios: rec.ratios,
            restored_blocks: restored,
            covert_rate: rate,
        });
        best = Some((v.clone(), w.clone()));
        if let Some(p) = prev {
            if (rate - p).abs() <= opts.rate_tol * p.abs().max(1e-12) {
                break;
            }
        }
    }
    let (v, w) = best.ok_or_else(|| Error::InfeasibleDesign("no iterate".into()))?;
    let solution = BeamformerSolution::fully_digital(v, w);
    let report = PerformanceReport::evaluate(&solution, ch, scene, cfg, opts.pfa)?;
    let scope = match (spec.willie_qos, spec.sensing) {
        (true, true) => AuditScope::nominal(cfg),
        (true, false) => AuditScope::nominal(cfg).without_sensing(),
        (false, s) => AuditScope { sensing: s, ..AuditScope::robust(cfg) },
    };
    let audit = audit(&solution, ch, scene, cfg, &scope)?;
    Ok(FdbfOutcome { solution, report, audit, trace })
}

/// Alternating receive-filter / SDR design with perfect Willie CSI.
pub fn solve_fdbf(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    opts: &FdbfOptions,
) -> Result<FdbfOutcome> {
    let spec = SdrSpec { sensing: opts.sensing, ..SdrSpec::NOMINAL };
    run(ch, scene, cfg, opts, spec)
}

/// Design with the covertness constraint enforced over the whole uncertainty ball
/// around `ch.willie_est`; Willie's rate requirement is dropped.
pub fn solve_robust_fdbf(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    opts: &FdbfOptions,
) -> Result<FdbfOutcome> {
    let spec = SdrSpec { sensing: opts.sensing, ..SdrSpec::ROBUST };
    run(ch, scene, cfg, opts, spec)
}

/// Run any relaxation variant (used for comparisons between variants).
pub fn solve_fdbf_with(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    opts: &FdbfOptions,
    spec: SdrSpec,
) -> Result<FdbfOutcome> {
    run(ch, scene, cfg, opts, spec)
}
