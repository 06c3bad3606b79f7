//! Hybrid design: WMMSE rewrite of the covert rate, then an augmented-Lagrangian
//! splitting where each constraint gets its own copy of the beamformer and the
//! copies are pulled together by scaled consensus duals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fdbf::{mrt_start, update_receive_filter_fd};
use crate::linalg::{c, fro2, herm_eig, CMat, CVec, C64};
use crate::model::{
    audit, sample_ball, sinr_and_rates, solve_gamma_cap, steering, AuditScope, BeamformerSolution,
    ChannelSet, ConstraintAudit, PerformanceReport, SensingScene, SystemConfig,
};
use crate::numerics::{solve_qcqp1_spectral, SpectralComponent, SpectralQcqp};

/// Relative constraint violation above which a final hybrid design is rejected.
pub const FEASIBILITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct HbfOptions {
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    /// Sweeps run before the residual test may end the inner loop.
    pub min_inner_iters: usize,
    /// Outer stop: relative covert-rate change.
    pub rate_tol: f64,
    /// Inner stop: largest consensus residual over `max(1, |Y|)`.
    pub residual_tol: f64,
    /// Penalties for the `V_RF V_D`, QoS, covertness and sensing copies.
    pub rho: [f64; 4],
    pub rho_growth: f64,
    /// A penalty grows when its own residual has not dropped by 10% over this many iterations.
    pub stagnation_window: usize,
    pub ccd_max_sweeps: usize,
    pub ccd_tol: f64,
    /// Willie channel samples in robust mode.
    pub robust_samples: usize,
    pub sensing: bool,
    pub pfa: f64,
}

impl Default for HbfOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 30,
            max_inner_iters: 300,
            min_inner_iters: 50,
            rate_tol: 1e-4,
            residual_tol: 1e-4,
            rho: [1.0; 4],
            rho_growth: 1.5,
            stagnation_window: 20,
            ccd_max_sweeps: 100,
            ccd_tol: 1e-6,
            robust_samples: 50,
            sensing: true,
            pfa: 1e-4,
        }
    }
}

/// Primal copies, scaled duals and WMMSE scalars of the splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct AlState {
    pub y: CMat,
    /// One copy per user in `qos_users`.
    pub t: Vec<CMat>,
    /// One copy per entry of `willie_channels`.
    pub g: Vec<CMat>,
    pub m: CMat,
    pub v_rf: CMat,
    pub v_d: CMat,
    pub d: CMat,
    pub phi: Vec<CMat>,
    pub z: Vec<CMat>,
    pub omega: CMat,
    pub rho: [f64; 4],
    /// Receive decoder of Bob.
    pub p: C64,
    /// WMMSE weight.
    pub omega_w: f64,
    pub w: CVec,
    pub qos_users: Vec<usize>,
    /// The true channel, or the robust samples.
    pub willie_channels: Vec<CVec>,
    pub sensing: bool,
    /// Set when the digital least-squares fit needed regularization.
    pub regularized: bool,
}

impl AlState {
    pub fn v_full(&self) -> CMat {
        &self.v_rf * &self.v_d
    }

    /// Largest consensus residual relative to `max(1, |Y|)`.
    pub fn residual(&self) -> f64 {
        self.block_residuals().into_iter().fold(0.0, f64::max)
    }

    /// Consensus residuals of the `V_RF V_D`, QoS, covertness and sensing copies,
    /// relative to `max(1, |Y|)`.
    pub fn block_residuals(&self) -> [f64; 4] {
        let y = &self.y;
        let dist = |m: &CMat| fro2(&(m - y)).sqrt();
        let worst = |ms: &[CMat]| ms.iter().map(dist).fold(0.0, f64::max);
        let scale = fro2(y).sqrt().max(1.0);
        let m = if self.sensing { dist(&self.m) } else { 0.0 };
        [dist(&self.v_full()), worst(&self.t), worst(&self.g), m].map(|r| r / scale)
    }

    /// Each covertness copy carries `rho_3 / K` so the total weight does not depend on K.
    fn g_weight(&self) -> f64 {
        self.rho[2] / self.g.len() as f64
    }

    /// Multiplies penalty `k` by `f`, keeping the unscaled duals fixed.
    fn scale_rho(&mut self, k: usize, f: f64) {
        self.rho[k] *= f;
        let inv = c(1.0 / f);
        match k {
            0 => self.d *= inv,
            1 => self.phi.iter_mut().for_each(|x| *x *= inv),
            2 => self.z.iter_mut().for_each(|x| *x *= inv),
            _ => self.omega *= inv,
        }
    }
}

/// Augmented-Lagrangian value at the current state. The data term is Bob's MSE
/// without the WMMSE weight, which only rescales it for a single covert stream.
pub fn al_value(state: &AlState, ch: &ChannelSet, cfg: &SystemConfig) -> f64 {
    let s = bob_gains(&state.y, ch);
    let mse = state.p.norm_sqr() * s.norm_squared() - 2.0 * (state.p * s[cfg.bob()]).re;
    let y = &state.y;
    let mut l = mse;
    l += 0.5 * state.rho[0] * fro2(&(y - state.v_full() + &state.d));
    for (t, phi) in state.t.iter().zip(&state.phi) {
        l += 0.5 * state.rho[1] * fro2(&(t - y + phi));
    }
    let gw = state.g_weight();
    for (g, z) in state.g.iter().zip(&state.z) {
        l += 0.5 * gw * fro2(&(g - y + z));
    }
    if state.sensing {
        l += 0.5 * state.rho[3] * fro2(&(&state.m - y + &state.omega));
    }
    l
}

/// Receive filter maximizing the sensing SINR of `V_RF V_D`.
pub fn update_receive_filter_hbf(
    v_rf: &CMat,
    v_d: &CMat,
    scene: &SensingScene,
    cfg: &SystemConfig,
) -> Result<CVec> {
    update_receive_filter_fd(&(v_rf * v_d), scene, cfg)
}

/// MMSE decoder `p` of Bob and the weight `omega = 1 / E`.
pub fn wmmse_scalars(v_rf: &CMat, v_d: &CMat, ch: &ChannelSet, cfg: &SystemConfig) -> (C64, f64) {
    let s = bob_gains(&(v_rf * v_d), ch);
    let p = s[cfg.bob()].conj() / (s.norm_squared() + cfg.noise_bob);
    (p, 1.0 / wmmse_error(p, &s, cfg.noise_bob, cfg.bob()))
}

/// Effective gains `h_B^H v_i` of every beam at Bob.
pub fn bob_gains(v: &CMat, ch: &ChannelSet) -> CVec {
    let hb = ch.bob();
    CVec::from_iterator(v.ncols(), v.column_iter().map(|col| hb.dotc(&col)))
}

/// Mean-square error of Bob's estimate `p y_B` given the gains `s_i = h_B^H v_i`.
pub fn wmmse_error(p: C64, s: &CVec, noise: f64, bob: usize) -> f64 {
    p.norm_sqr() * (s.norm_squared() + noise) - 2.0 * (p * s[bob]).re + 1.0
}

fn embed(col: &CVec, i: usize, rows: usize, cols: usize) -> CVec {
    let mut x = CVec::zeros(rows * cols);
    x.rows_mut(i * rows, rows).copy_from(col);
    x
}

fn unvec(x: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, x.as_slice())
}

/// Spectral form for a block-diagonal `Q` whose `i`-th diagonal block is
/// `coefs[i] h h^H`, with `target` laid out column by column.
fn rank_one_blocks(target: &CMat, h: &CVec, coefs: &[f64], bound: f64) -> SpectralQcqp {
    let (rows, cols) = target.shape();
    let hn2 = h.norm_squared();
    let u = h / c(hn2.sqrt());
    let mut rest = CMat::zeros(rows, cols);
    let mut components = Vec::with_capacity(cols + 1);
    for i in 0..cols {
        let t = target.column(i).into_owned();
        let along = &u * u.dotc(&t);
        rest.set_column(i, &(&t - &along));
        components.push(SpectralComponent {
            eigenvalue: coefs[i] * hn2,
            projection: embed(&along, i, rows, cols),
            direction: Some(embed(&u, i, rows, cols)),
        });
    }
    components.push(SpectralComponent {
        eigenvalue: 0.0,
        projection: CVec::from_column_slice(rest.as_slice()),
        direction: None,
    });
    SpectralQcqp { components, bound }
}

/// Spectral form for `Q = I (x) B` given the eigenpairs of `B`.
fn repeated_block(target: &CMat, vals: &[f64], vecs: &CMat, bound: f64) -> SpectralQcqp {
    let (rows, cols) = target.shape();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let coefs = vecs.adjoint() * target;
    let components = vals
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let u = vecs.column(k).into_owned();
            let mut proj = CMat::zeros(rows, cols);
            for i in 0..cols {
                proj.set_column(i, &(&u * coefs[(k, i)]));
            }
            SpectralComponent {
                eigenvalue: if l.abs() <= 1e-14 * scale { 0.0 } else { l },
                projection: CVec::from_column_slice(proj.as_slice()),
                direction: Some(embed(&u, 0, rows, cols)),
            }
        })
        .collect();
    SpectralQcqp { components, bound }
}

/// Minimizes the AL over `Y` inside the power ball.
///
/// The quadratic `y^H A y - 2 Re b^H y` is mapped to a projection by `x = A^{1/2} y`,
/// giving `min |x - A^{-1/2} b|^2` s.t. `x^H A^{-1} x <= P`.
pub fn step_y(state: &AlState, ch: &ChannelSet, cfg: &SystemConfig) -> Result<CMat> {
    let (rows, cols) = state.y.shape();
    let hb = ch.bob();
    let gw = state.g_weight();
    let mut rho_sum = state.rho[0] + state.rho[1] * state.t.len() as f64 + gw * state.g.len() as f64;
    let mut b = (state.v_full() - &state.d) * c(0.5 * state.rho[0]);
    for (t, phi) in state.t.iter().zip(&state.phi) {
        b += (t + phi) * c(0.5 * state.rho[1]);
    }
    for (g, z) in state.g.iter().zip(&state.z) {
        b += (g + z) * c(0.5 * gw);
    }
    if state.sensing {
        rho_sum += state.rho[3];
        b += (&state.m + &state.omega) * c(0.5 * state.rho[3]);
    }
    let mut bcol = b.column_mut(cfg.bob());
    bcol += &hb * state.p.conj();

    let a0 = 0.5 * rho_sum;
    let hn2 = hb.norm_squared();
    let a1 = a0 + state.p.norm_sqr() * hn2;
    let u = &hb / c(hn2.sqrt());
    let (mut along, mut perp) = (CMat::zeros(rows, cols), CMat::zeros(rows, cols));
    for i in 0..cols {
        let col = b.column(i).into_owned();
        let a = &u * u.dotc(&col);
        perp.set_column(i, &((&col - &a) / c(a0.sqrt())));
        along.set_column(i, &(a / c(a1.sqrt())));
    }
    let problem = SpectralQcqp {
        components: vec![
            SpectralComponent {
                eigenvalue: 1.0 / a1,
                projection: CVec::from_column_slice(along.as_slice()),
                direction: None,
            },
            SpectralComponent {
                eigenvalue: 1.0 / a0,
                projection: CVec::from_column_slice(perp.as_slice()),
                direction: None,
            },
        ],
        bound: cfg.total_power,
    };
    let x = unvec(&solve_qcqp1_spectral(&problem)?.x, rows, cols);
    let mut y = CMat::zeros(rows, cols);
    for i in 0..cols {
        let col = x.column(i).into_owned();
        let a = &u * u.dotc(&col);
        y.set_column(i, &((&col - &a) / c(a0.sqrt()) + a / c(a1.sqrt())));
    }
    Ok(y)
}

/// Projects `Y - Phi_u` onto the rate requirement of overt user `u`.
pub fn step_t(state: &AlState, ch: &ChannelSet, cfg: &SystemConfig, u: usize) -> Result<CMat> {
    let slot = state
        .qos_users
        .iter()
        .position(|&x| x == u)
        .ok_or_else(|| Error::InvalidConfig(format!("user {u} has no rate requirement")))?;
    let target = &state.y - &state.phi[slot];
    let r = 2f64.powf(cfg.qos(u));
    let coefs: Vec<f64> = (0..cfg.streams()).map(|i| if i == u { -1.0 } else { r - 1.0 }).collect();
    let problem = rank_one_blocks(&target, &ch.column(u), &coefs, (1.0 - r) * cfg.noise(u));
    let (rows, cols) = target.shape();
    Ok(unvec(&solve_qcqp1_spectral(&problem)?.x, rows, cols))
}

/// Projects `Y - Z_k` onto the covertness constraint at Willie channel `k`.
pub fn step_g(state: &AlState, cfg: &SystemConfig, gamma_cap: f64, k: usize) -> Result<CMat> {
    let target = &state.y - &state.z[k];
    let coefs: Vec<f64> =
        (0..cfg.streams()).map(|i| if i == cfg.bob() { 1.0 } else { 1.0 - gamma_cap }).collect();
    let problem =
        rank_one_blocks(&target, &state.willie_channels[k], &coefs, (gamma_cap - 1.0) * cfg.noise_willie);
    let (rows, cols) = target.shape();
    Ok(unvec(&solve_qcqp1_spectral(&problem)?.x, rows, cols))
}

/// Per-column block of the sensing constraint,
/// `gamma sum_q |s_q|^2 A_q^H w w^H A_q - |s_0|^2 A_0^H w w^H A_0`.
fn sensing_block(w: &CVec, scene: &SensingScene, cfg: &SystemConfig) -> CMat {
    crate::fdbf::sensing_matrix(w, scene, cfg)
}

/// Projects `Y - Omega` onto the sensing SINR requirement at the current filter.
pub fn step_m(state: &AlState, scene: &SensingScene, cfg: &SystemConfig) -> Result<CMat> {
    let target = &state.y - &state.omega;
    let (vals, vecs) = herm_eig(&sensing_block(&state.w, scene, cfg));
    let bound = -cfg.sensing_gamma() * cfg.noise_radar * state.w.norm_squared();
    let problem = repeated_block(&target, &vals, &vecs, bound);
    let (rows, cols) = target.shape();
    match solve_qcqp1_spectral(&problem) {
        Ok(sol) => Ok(unvec(&sol.x, rows, cols)),
        Err(Error::Infeasible) => Err(Error::SensingInfeasible),
        Err(e) => Err(e),
    }
}

/// Cyclic coordinate descent on the phases of `V_RF` for `|V_RF V_D - Y - D|^2`.
///
/// Each entry is set to its exact minimizer with all other entries fixed. Returns
/// the new matrix and the number of sweeps.
pub fn step_vrf(state: &AlState, max_sweeps: usize, tol: f64) -> (CMat, usize) {
    let (v, sweeps, _) = ccd_phases(&state.v_rf, &state.v_d, &(&state.y + &state.d), max_sweeps, tol);
    (v, sweeps)
}

/// Phase-only fit of `V_RF` minimizing `|V_RF V_D - target|^2`; also returns the
/// final objective.
pub(crate) fn ccd_phases(
    v_rf: &CMat,
    vd: &CMat,
    target: &CMat,
    max_sweeps: usize,
    tol: f64,
) -> (CMat, usize, f64) {
    let mut v = v_rf.clone();
    let mut e = &v * vd - target;
    let (mt, nrf) = v.shape();
    let cols = vd.ncols();
    let dn: Vec<f64> = (0..nrf).map(|n| vd.row(n).norm_squared()).collect();
    let mut obj = fro2(&e);
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        for n in 0..nrf {
            for m in 0..mt {
                let x0 = v[(m, n)];
                let mut psi = C64::new(0.0, 0.0);
                for k in 0..cols {
                    psi += e[(m, k)] * vd[(n, k)].conj();
                }
                psi -= x0 * dn[n];
                let mag = psi.norm();
                if mag == 0.0 {
                    continue;
                }
                let x = -psi / mag;
                let delta = x - x0;
                for k in 0..cols {
                    e[(m, k)] += delta * vd[(n, k)];
                }
                v[(m, n)] = x;
            }
        }
        let next = fro2(&e);
        let done = obj - next <= tol * obj.max(f64::MIN_POSITIVE);
        obj = next;
        if done {
            break;
        }
    }
    (v, sweeps, obj)
}

/// Least-squares digital beamformer `(V_RF^H V_RF)^{-1} V_RF^H (Y + D)`.
/// The flag reports that a `1e-10` Tikhonov term was needed.
pub fn step_vd(state: &AlState) -> (CMat, bool) {
    least_squares(&state.v_rf, &(&state.y + &state.d))
}

pub(crate) fn least_squares(a: &CMat, b: &CMat) -> (CMat, bool) {
    let gram = a.adjoint() * a;
    let rhs = a.adjoint() * b;
    if let Some(ch) = gram.clone().cholesky() {
        // Pivots below this relative size mean the columns are numerically dependent.
        let piv = ch.l_dirty().diagonal().map(|z| z.re * z.re);
        let well_posed = piv.min() > 1e-12 * piv.max();
        let x = ch.solve(&rhs);
        if well_posed && x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return (x, false);
        }
    }
    let n = gram.nrows();
    let reg = 1e-10 * gram.trace().re.max(1.0);
    let g = gram + CMat::identity(n, n) * c(reg);
    let x = match g.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => g.pseudo_inverse(1e-14).map(|p| p * &rhs).unwrap_or_else(|_| CMat::zeros(n, b.ncols())),
    };
    (x, true)
}

/// Consensus dual ascent on the scaled duals.
pub fn step_duals(state: &mut AlState) {
    let y = state.y.clone();
    state.d += &y - state.v_full();
    for (phi, t) in state.phi.iter_mut().zip(&state.t) {
        *phi += t - &y;
    }
    for (z, g) in state.z.iter_mut().zip(&state.g) {
        *z += g - &y;
    }
    if state.sensing {
        state.omega += &state.m - &y;
    }
}

/// One outer iteration of the hybrid design.
#[derive(Debug, Clone, PartialEq)]
pub struct HbfIteration {
    pub iteration: usize,
    pub inner_iters: usize,
    pub residual: f64,
    /// Largest increase of the AL over one sweep at fixed scalars and duals,
    /// relative to `max(1, |AL|)`.
    pub max_al_increase: f64,
    pub rho: [f64; 4],
    pub covert_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HbfOutcome {
    pub solution: BeamformerSolution,
    pub report: PerformanceReport,
    pub audit: ConstraintAudit,
    pub trace: Vec<HbfIteration>,
    pub state: AlState,
}

/// Random unit-modulus analog beamformer.
pub(crate) fn random_phases<R: Rng + ?Sized>(mt: usize, nrf: usize, rng: &mut R) -> CMat {
    CMat::from_fn(mt, nrf, |_, _| C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU))
}

fn initial_state(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    opts: &HbfOptions,
    robust: bool,
    rng: &mut ChaCha8Rng,
) -> AlState {
    let v_rf = random_phases(cfg.mt, cfg.n_rf, rng);
    let (v_d, regularized) = least_squares(&v_rf, &mrt_start(ch, cfg));
    let mut y = &v_rf * &v_d;
    let pw = fro2(&y);
    if pw > cfg.total_power {
        y *= c((cfg.total_power / pw).sqrt());
    }
    let qos_users: Vec<usize> = if robust { (0..cfg.u_carols).collect() } else { (0..=cfg.willie()).collect() };
    let willie_channels: Vec<CVec> = if robust {
        (0..opts.robust_samples.max(1)).map(|_| sample_ball(&ch.willie_est, ch.willie_radius, rng)).collect()
    } else {
        vec![ch.willie()]
    };
    let zero = CMat::zeros(y.nrows(), y.ncols());
    AlState {
        t: vec![y.clone(); qos_users.len()],
        g: vec![y.clone(); willie_channels.len()],
        m: y.clone(),
        d: zero.clone(),
        phi: vec![zero.clone(); qos_users.len()],
        z: vec![zero.clone(); willie_channels.len()],
        omega: zero,
        y,
        v_rf,
        v_d,
        rho: opts.rho,
        p: C64::new(0.0, 0.0),
        omega_w: 1.0,
        w: CVec::zeros(cfg.mr),
        qos_users,
        willie_channels,
        sensing: opts.sensing,
        regularized,
    }
}

/// One inner sweep; returns the AL change at fixed scalars and duals.
fn sweep(
    st: &mut AlState,
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    opts: &HbfOptions,
    gamma_cap: f64,
) -> Result<(f64, f64)> {
    let (p, omega_w) = wmmse_scalars(&st.v_rf, &st.v_d, ch, cfg);
    st.p = p;
    st.omega_w = omega_w;
    let before = al_value(st, ch, cfg);
    st.y = step_y(st, ch, cfg)?;
    let users = st.qos_users.clone();
    for (slot, &u) in users.iter().enumerate() {
        st.t[slot] = step_t(st, ch, cfg, u)?;
    }
    for k in 0..st.g.len() {
        st.g[k] = step_g(st, cfg, gamma_cap, k)?;
    }
    if st.sensing {
        st.m = step_m(st, scene, cfg)?;
    }
    st.v_rf = step_vrf(st, opts.ccd_max_sweeps, opts.ccd_tol).0;
    let (v_d, reg) = step_vd(st);
    st.v_d = v_d;
    st.regularized |= reg;
    let after = al_value(st, ch, cfg);
    step_duals(st);
    Ok((before, after))
}

fn run(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    opts: &HbfOptions,
    robust: bool,
) -> Result<HbfOutcome> {
    cfg.validate()?;
    ch.check(cfg)?;
    scene.validate()?;
    let gamma_cap = solve_gamma_cap(cfg.covert_eps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x4b3f_0a17_c2d1);
    let mut st = initial_state(ch, cfg, opts, robust, &mut rng);
    st.w = steering(scene.target_angle, cfg.mr);
    let mut trace: Vec<HbfIteration> = Vec::new();

    for it in 0..opts.max_outer_iters.max(1) {
        if opts.sensing {
            st.w = update_receive_filter_hbf(&st.v_rf, &st.v_d, scene, cfg)?;
        }
        for k in 0..4 {
            let reset = opts.rho[k] / st.rho[k];
            if reset != 1.0 {
                st.scale_rho(k, reset);
            }
        }
        let mut history: Vec<[f64; 4]> = Vec::new();
        let mut max_inc = f64::NEG_INFINITY;
        let mut inner = 0;
        let mut residual = f64::INFINITY;
        while inner < opts.max_inner_iters {
            let (before, after) = sweep(&mut st, ch, scene, cfg, opts, gamma_cap)?;
            max_inc = max_inc.max((after - before) / before.abs().max(1.0));
            inner += 1;
            let blocks = st.block_residuals();
            residual = blocks.into_iter().fold(0.0, f64::max);
            history.push(blocks);
            if residual < opts.residual_tol && inner >= opts.min_inner_iters {
                break;
            }
            let win = opts.stagnation_window;
            if win > 0 && history.len() > win && inner % win == 0 {
                let past = history[history.len() - 1 - win];
                for k in 0..4 {
                    if blocks[k] >= opts.residual_tol && blocks[k] > 0.9 * past[k] {
                        st.scale_rho(k, opts.rho_growth);
                    }
                }
            }
        }
        let bf = BeamformerSolution::hybrid(st.v_rf.clone(), st.v_d.clone(), st.w.clone());
        let (_, rate) = sinr_and_rates(&bf, ch, cfg);
        let prev = trace.last().map(|t| t.covert_rate);
        trace.push(HbfIteration {
            iteration: it,
            inner_iters: inner,
            residual,
            max_al_increase: max_inc,
            rho: st.rho,
            covert_rate: rate,
        });
        if let Some(p) = prev {
            if (rate - p).abs() <= opts.rate_tol * p.abs().max(1e-12) {
                break;
            }
        }
    }

    // The consensus point meets the power ball only up to the residual.
    let mut v_d = st.v_d.clone();
    let pw = fro2(&(&st.v_rf * &v_d));
    if pw > cfg.total_power {
        v_d *= c((cfg.total_power / pw).sqrt());
    }
    let solution = BeamformerSolution::hybrid(st.v_rf.clone(), v_d, st.w.clone());
    let report = PerformanceReport::evaluate(&solution, ch, scene, cfg, opts.pfa)?;
    let scope = if robust { AuditScope::robust(cfg) } else { AuditScope::nominal(cfg) };
    let scope = if opts.sensing { scope } else { scope.without_sensing() };
    let audit = audit(&solution, ch, scene, cfg, &scope)?;
    // The splitting always returns a point; one that misses the demands it could
    // see is an infeasible design. Robust mode never sees the true Willie channel.
    let mut worst = audit.power;
    worst = audit.qos.iter().fold(worst, |m, &(_, s)| m.min(s));
    worst = audit.sensing.map_or(worst, |s| worst.min(s));
    if !robust {
        worst = worst.min(audit.covert);
    }
    if worst < -FEASIBILITY_TOL {
        return Err(Error::InfeasibleDesign(format!("final design misses a constraint by {:.3e}", -worst)));
    }
    Ok(HbfOutcome { solution, report, audit, trace, state: st })
}

/// Alternating receive-filter / augmented-Lagrangian hybrid design. In robust
/// mode the covertness copy is replicated over channels sampled from the ball
/// around `ch.willie_est` and Willie's rate requirement is dropped.
pub fn solve_hbf(
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    opts: &HbfOptions,
    robust: bool,
) -> Result<HbfOutcome> {
    run(ch, scene, cfg, opts, robust)
}
