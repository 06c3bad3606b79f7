use crate::error::{Error, Result};
use crate::linalg::{norm2, CMat, CVec, C64};
use crate::numerics::scalar_root;
use std::f64::consts::PI;

use super::{marcum_q1, BeamformerSolution, ChannelSet, SensingScene, SystemConfig};

/// Uniform linear array response `exp(j*pi*k*sin(angle)) / sqrt(n)`.
pub fn steering(angle: f64, n: usize) -> CVec {
    let s = angle.sin();
    let amp = 1.0 / (n as f64).sqrt();
    CVec::from_fn(n, |k, _| C64::from_polar(amp, PI * k as f64 * s))
}

/// `A(angle) = a_r(angle) a_t(angle)^H`, size `mr x mt`.
pub fn response(angle: f64, mt: usize, mr: usize) -> CMat {
    steering(angle, mr) * steering(angle, mt).adjoint()
}

/// SINR of each stream at its intended receiver, all other columns interfering.
pub fn sinrs(v: &CMat, h: &CMat, cfg: &SystemConfig) -> Vec<f64> {
    let g = h.adjoint() * v;
    (0..cfg.streams())
        .map(|i| {
            let total: f64 = g.row(i).iter().map(|z| z.norm_sqr()).sum();
            let own = g[(i, i)].norm_sqr();
            own / ((total - own).max(0.0) + cfg.noise(i))
        })
        .collect()
}

/// Overt rates (Carols then Willie) and the covert rate, bits/s/Hz.
pub fn sinr_and_rates(
    bf: &BeamformerSolution,
    ch: &ChannelSet,
    cfg: &SystemConfig,
) -> (Vec<f64>, f64) {
    let s = sinrs(&bf.v_full, &ch.h, cfg);
    let rates: Vec<f64> = s.iter().map(|x| (1.0 + x).log2()).collect();
    (rates[..=cfg.willie()].to_vec(), rates[cfg.bob()])
}

/// Received-power statistics at Willie under both hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisStats {
    pub kappa0: f64,
    pub kappa1: f64,
    pub z: f64,
    pub gamma_cap: f64,
}

impl HypothesisStats {
    pub fn new(kappa0: f64, kappa1: f64, gamma_cap: f64) -> Result<Self> {
        if !(kappa0 > 0.0) || !(kappa1 > 0.0) || !kappa0.is_finite() || !kappa1.is_finite() {
            return Err(Error::InvalidStats(format!("kappa0={kappa0}, kappa1={kappa1}")));
        }
        Ok(Self { kappa0, kappa1, z: kappa1 / kappa0, gamma_cap })
    }

    /// `z - 1` without cancellation.
    pub fn excess(&self) -> f64 {
        (self.kappa1 - self.kappa0) / self.kappa0
    }
}

/// Statistics at the true Willie channel (column `U`).
pub fn hypothesis_stats(
    bf: &BeamformerSolution,
    ch: &ChannelSet,
    cfg: &SystemConfig,
) -> HypothesisStats {
    let hw = ch.willie();
    let g = bf.v_full.adjoint() * &hw;
    let leak = g[cfg.bob()].norm_sqr();
    let kappa0 = g.iter().take(cfg.bob()).map(|z| z.norm_sqr()).sum::<f64>() + cfg.noise_willie;
    HypothesisStats {
        kappa0,
        kappa1: kappa0 + leak,
        z: (kappa0 + leak) / kappa0,
        gamma_cap: solve_gamma_cap(cfg.covert_eps),
    }
}

/// Minimum total detection error of Willie's likelihood-ratio test.
pub fn detection_error_exact(stats: &HypothesisStats) -> Result<f64> {
    if !(stats.kappa0 > 0.0) || !(stats.kappa1 > 0.0) || stats.kappa1 < stats.kappa0 {
        return Err(Error::InvalidStats(format!(
            "kappa0={}, kappa1={}",
            stats.kappa0, stats.kappa1
        )));
    }
    let d = stats.excess();
    if d.abs() < 1e-12 {
        return Ok(1.0);
    }
    let ln_z = d.ln_1p();
    let z = 1.0 + d;
    let pe = 1.0 + (-z * ln_z / d).exp() - (-ln_z / d).exp();
    Ok(pe.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlDivergence {
    /// `D(P0 || P1)` in nats.
    pub divergence: f64,
    /// Pinsker lower bound on the detection error, `1 - sqrt(D/2)`.
    pub p_e_bound: f64,
}

/// `ln(1 + d) - d / (1 + d)`, by its power series near zero.
fn kl_of_excess(d: f64) -> f64 {
    if d.abs() < 1e-3 {
        let mut term = d;
        let mut sum = 0.0;
        for k in 2..10 {
            term *= -d;
            sum -= term * (1.0 - 1.0 / k as f64);
        }
        sum
    } else {
        d.ln_1p() - d / (1.0 + d)
    }
}

pub fn kl_divergence(stats: &HypothesisStats) -> KlDivergence {
    let divergence = kl_of_excess(stats.excess()).max(0.0);
    KlDivergence { divergence, p_e_bound: 1.0 - (divergence / 2.0).sqrt() }
}

/// Largest ratio `z = kappa1/kappa0 >= 1` with `ln z + 1/z - 1 <= 2 eps^2`.
pub fn solve_gamma_cap(eps: f64) -> f64 {
    if !(eps > 0.0) {
        return 1.0;
    }
    // sqrt(2 D) grows like the excess itself, so this residual is relative.
    let f = |d: f64| (2.0 * kl_of_excess(d)).sqrt() / (2.0 * eps) - 1.0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    1.0 + scalar_root(f, 0.0, hi, 1e-14).unwrap_or(0.0)
}

/// Target and clutter echo powers after the receive filter.
pub(crate) fn sensing_powers(
    v: &CMat,
    w: &CVec,
    scene: &SensingScene,
    cfg: &SystemConfig,
) -> (f64, f64) {
    let echo = |angle: f64, amp: C64| {
        let rx = w.dotc(&steering(angle, cfg.mr)).norm_sqr();
        let tx = v.adjoint() * steering(angle, cfg.mt);
        amp.norm_sqr() * rx * norm2(&tx)
    };
    let signal = echo(scene.target_angle, scene.target_amp);
    let clutter: f64 = scene.clutters.iter().map(|c| echo(c.angle, c.amp)).sum();
    (signal, clutter + cfg.noise_radar * norm2(w))
}

/// Output SINR of the sensing receiver (linear).
pub fn sensing_sinr(
    bf: &BeamformerSolution,
    scene: &SensingScene,
    cfg: &SystemConfig,
) -> Result<f64> {
    if norm2(&bf.w) == 0.0 {
        return Err(Error::InvalidFilter);
    }
    let (s, d) = sensing_powers(&bf.v_full, &bf.w, scene, cfg);
    Ok(s / d)
}

/// Detection probability at false-alarm rate `pfa`.
pub fn detection_probability(sinr: f64, pfa: f64) -> f64 {
    let a = (2.0 * sinr.max(0.0)).sqrt();
    let b = (-2.0 * pfa.ln()).sqrt();
    marcum_q1(a, b).clamp(0.0, 1.0)
}

/// `s` angles evenly spaced on [-90, 90] degrees, in radians.
pub fn angle_grid(s: usize) -> Vec<f64> {
    let s = s.max(2);
    (0..s)
        .map(|k| (-90.0 + 180.0 * k as f64 / (s - 1) as f64).to_radians())
        .collect()
}

/// Normalized receive beampattern `(angle, dB)` with maximum 0 dB.
pub fn beampattern(bf: &BeamformerSolution, cfg: &SystemConfig, grid: &[f64]) -> Vec<(f64, f64)> {
    let raw: Vec<f64> = grid
        .iter()
        .map(|&a| {
            let rx = bf.w.dotc(&steering(a, cfg.mr)).norm_sqr();
            rx * norm2(&(bf.v_full.adjoint() * steering(a, cfg.mt)))
        })
        .collect();
    let peak = raw.iter().cloned().fold(0.0, f64::max);
    grid.iter()
        .zip(&raw)
        .map(|(&a, &p)| {
            let db = if peak > 0.0 { 10.0 * (p / peak).log10() } else { 0.0 };
            (a, db.max(-400.0))
        })
        .collect()
}

/// All reported metrics of one design.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub covert_rate: f64,
    pub overt_rates: Vec<f64>,
    pub p_e: f64,
    pub p_e_bound: f64,
    pub kl_div: f64,
    pub sensing_sinr: f64,
    pub detection_prob: f64,
    pub pfa: f64,
    pub beampattern: Vec<(f64, f64)>,
}

impl PerformanceReport {
    pub fn evaluate(
        bf: &BeamformerSolution,
        ch: &ChannelSet,
        scene: &SensingScene,
        cfg: &SystemConfig,
        pfa: f64,
    ) -> Result<Self> {
        let (overt_rates, covert_rate) = sinr_and_rates(bf, ch, cfg);
        let stats = hypothesis_stats(bf, ch, cfg);
        let p_e = detection_error_exact(&stats)?;
        let kl = kl_divergence(&stats);
        let sinr = sensing_sinr(bf, scene, cfg)?;
        Ok(Self {
            covert_rate,
            overt_rates,
            p_e,
            p_e_bound: kl.p_e_bound,
            kl_div: kl.divergence,
            sensing_sinr: sinr,
            detection_prob: detection_probability(sinr, pfa),
            pfa,
            beampattern: beampattern(bf, cfg, &angle_grid(cfg.angular_samples)),
        })
    }

    pub fn min_overt_rate(&self) -> f64 {
        self.overt_rates.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}
