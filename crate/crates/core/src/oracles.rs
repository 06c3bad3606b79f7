//! Brute-force and Monte-Carlo references for the closed forms and solvers.
//! Nothing in here is used by the design algorithms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{quad_form, CMat, CVec, C64};
use crate::model::{sample_ball, BeamformerSolution, ChannelSet, HypothesisStats, SystemConfig};
use crate::numerics::QcqpOneProblem;

/// Empirical detection error of the likelihood-ratio warden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub p_e: f64,
    pub false_alarm: f64,
    pub missed_detection: f64,
    pub std_err: f64,
}

/// Optimal threshold on `|y_W|^2` between exponential laws of means `kappa0 < kappa1`.
pub fn np_threshold(kappa0: f64, kappa1: f64) -> f64 {
    kappa0 * kappa1 / (kappa1 - kappa0) * (kappa1 / kappa0).ln()
}

/// Draws `trials` received powers under each hypothesis and applies the
/// threshold test.
pub fn mc_willie_detector(stats: &HypothesisStats, trials: usize, seed: u64) -> Result<McEstimate> {
    if trials < 10_000 {
        return Err(Error::InvalidConfig(format!("need at least 1e4 trials, got {trials}")));
    }
    if !(stats.kappa0 > 0.0 && stats.kappa1 >= stats.kappa0) {
        return Err(Error::InvalidStats(format!("kappa0 {} kappa1 {}", stats.kappa0, stats.kappa1)));
    }
    if (stats.z - 1.0).abs() < 1e-12 {
        return Ok(McEstimate { p_e: 1.0, false_alarm: 1.0, missed_detection: 0.0, std_err: 0.0 });
    }
    let tau = np_threshold(stats.kappa0, stats.kappa1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut fa, mut md) = (0usize, 0usize);
    for _ in 0..trials {
        let e0: f64 = Exp1.sample(&mut rng);
        let e1: f64 = Exp1.sample(&mut rng);
        fa += usize::from(stats.kappa0 * e0 > tau);
        md += usize::from(stats.kappa1 * e1 <= tau);
    }
    let n = trials as f64;
    let (pfa, pmd) = (fa as f64 / n, md as f64 / n);
    let std_err = ((pfa * (1.0 - pfa) + pmd * (1.0 - pmd)) / n).sqrt();
    Ok(McEstimate { p_e: pfa + pmd, false_alarm: pfa, missed_detection: pmd, std_err })
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `D(P0 || P1)` for exponential laws of means `kappa0`, `kappa1`, by quadrature of
/// `p0 ln(p0 / p1)` in the variable `u = x / kappa0`. The tail beyond `u = 60`
/// is below `1e-24`.
pub fn numeric_kl(kappa0: f64, kappa1: f64) -> f64 {
    let log_ratio = (kappa1 / kappa0).ln();
    let slope = kappa0 / kappa1 - 1.0;
    let integrand = |u: f64| {
        let x = u * kappa0;
        let p0 = (-u).exp() / kappa0;
        let p1 = (-x / kappa1).exp() / kappa1;
        if p0 == 0.0 {
            return 0.0;
        }
        // Written with the densities for independence from the closed form;
        // the log is taken of the ratio expression to avoid underflow.
        let log = if p1 > 0.0 { (p0 / p1).ln() } else { log_ratio + slope * u };
        p0 * log * kappa0
    };
    adaptive_simpson(integrand, 0.0, 60.0, 1e-13)
}

/// Best objective `|x - t|^2` over `x^H Q x <= c` found by descent over boundary
/// directions. Starts are the target, a multiplier sweep of `(I + mu Q)^-1 t`,
/// and `restarts - 1` random directions.
///
/// A unit direction `d` with `d^H Q d` of the same sign as `c` defines the
/// boundary point `sqrt(c / d^H Q d) d`. Each start descends along the boundary
/// by projected gradient steps with radial retraction, then gets Newton polish.
pub fn brute_qcqp(p: &QcqpOneProblem, restarts: usize, seed: u64) -> f64 {
    let t = &p.target;
    let n = t.len();
    let c = p.bound;
    if quad_form(t, &p.quad) <= c {
        return 0.0;
    }
    let boundary = |d: &CVec| -> Option<CVec> {
        let q = quad_form(d, &p.quad);
        if c == 0.0 || q == 0.0 || (q > 0.0) != (c > 0.0) {
            return None;
        }
        Some(d * C64::new((c / q).sqrt(), 0.0))
    };
    let f = |d: &CVec| -> f64 {
        let dn = d / C64::new(d.norm(), 0.0);
        boundary(&dn).map_or(f64::INFINITY, |x| (x - t).norm_squared())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || {
        CVec::from_fn(n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
    };
    // Points `(I + mu Q)^-1 t` on a log grid of multipliers, projected
    // radially; the four best seed the descent.
    let mut sweep: Vec<(f64, CVec)> = (0..81)
        .filter_map(|k| {
            let mu = 10f64.powf(-4.0 + 0.1 * k as f64);
            let x = (CMat::identity(n, n) + &p.quad * C64::new(mu, 0.0)).lu().solve(t)?;
            let v = f(&x);
            v.is_finite().then_some((v, x))
        })
        .collect();
    sweep.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut starts = vec![t.clone()];
    starts.extend(sweep.into_iter().take(4).map(|(_, x)| x));
    for _ in 1..restarts.max(1) {
        starts.push(gauss());
    }
    let mut best = f64::INFINITY;
    for mut d in starts {
        d /= C64::new(d.norm(), 0.0);
        let mut fd = f(&d);
        if !fd.is_finite() {
            continue;
        }
        let mut step = 1e-2;
        for _ in 0..20_000 {
            let Some(x) = boundary(&d) else { break };
            // Gradient of |x - t|^2 with the component along the normal Q x removed.
            let mut g = (&x - t) * C64::new(2.0, 0.0);
            let normal = &p.quad * &x;
            let nn = normal.norm_squared();
            if nn > 0.0 {
                g -= &normal * C64::new(normal.dotc(&g).re / nn, 0.0);
            }
            let gn2 = g.norm_squared();
            if !gn2.is_finite() || gn2 <= 1e-30 * (1.0 + fd) {
                break;
            }
            let mut accepted = false;
            while step > 1e-18 {
                let cand = &x - &g * C64::new(step, 0.0);
                let cand = &cand / C64::new(cand.norm(), 0.0);
                let fc = f(&cand);
                if fc < fd - 1e-4 * step * gn2 {
                    d = cand;
                    fd = fc;
                    step *= 2.0;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        fd = newton_polish(&f, &mut d, fd);
        best = best.min(fd);
    }
    best
}

/// Damped Newton steps on the real coordinates of `d` with finite-difference
/// derivatives; `f` is scale invariant, so the radial direction is left to the damping.
fn newton_polish(f: &dyn Fn(&CVec) -> f64, d: &mut CVec, mut fd: f64) -> f64 {
    let n = d.len();
    let m = 2 * n;
    let bump = |d: &CVec, k: usize, h: f64| {
        let mut e = d.clone();
        if k < n {
            e[k].re += h;
        } else {
            e[k - n].im += h;
        }
        e
    };
    let mut lambda = 1e-6;
    for _ in 0..200 {
        let h = 1e-4;
        let mut g = nalgebra::DVector::<f64>::zeros(m);
        let mut hess = nalgebra::DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            let (fp, fm) = (f(&bump(d, i, h)), f(&bump(d, i, -h)));
            g[i] = (fp - fm) / (2.0 * h);
            hess[(i, i)] = (fp - 2.0 * fd + fm) / (h * h);
            for j in 0..i {
                let dp = bump(d, i, h);
                let dm = bump(d, i, -h);
                let v = (f(&bump(&dp, j, h)) - f(&bump(&dp, j, -h)) - f(&bump(&dm, j, h)) + f(&bump(&dm, j, -h)))
                    / (4.0 * h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        if g.norm() < 1e-12 {
            break;
        }
        let mut improved = false;
        while lambda < 1e8 {
            let shifted = &hess + nalgebra::DMatrix::<f64>::identity(m, m) * lambda;
            let Some(step) = shifted.cholesky().map(|ch| ch.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let mut cand = d.clone();
            for k in 0..n {
                cand[k] += C64::new(step[k], step[k + n]);
            }
            cand /= C64::new(cand.norm(), 0.0);
            let fc = f(&cand);
            if fc < fd {
                *d = cand;
                fd = fc;
                lambda = (lambda * 0.1).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    fd
}

/// Smallest covertness slack `Gamma - z` over Willie channels drawn uniformly from
/// the ball of radius `ch.willie_radius` around `ch.willie_est`.
pub fn ball_sample_verifier(
    solution: &BeamformerSolution,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    gamma_cap: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    let slack = |h: &CVec| {
        let gains: Vec<f64> =
            (0..cfg.streams()).map(|i| h.dotc(&solution.v_full.column(i)).norm_sqr()).collect();
        let kappa0: f64 = gains[..cfg.bob()].iter().sum::<f64>() + cfg.noise_willie;
        gamma_cap - (kappa0 + gains[cfg.bob()]) / kappa0
    };
    if ch.willie_radius == 0.0 {
        return slack(&ch.willie_est);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples.max(1))
        .map(|_| slack(&sample_ball(&ch.willie_est, ch.willie_radius, &mut rng)))
        .fold(f64::INFINITY, f64::min)
}
