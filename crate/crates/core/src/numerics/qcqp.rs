//! `min |x - t|^2  s.t.  x^H Q x <= c` for Hermitian, possibly indefinite `Q`.

use crate::error::{Error, Result};
use crate::linalg::{c as cx, herm_eig, norm2, CMat, CVec};

/// Dense problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqpOneProblem {
    pub target: CVec,
    pub quad: CMat,
    pub bound: f64,
}

/// One piece of an orthogonal decomposition of the target along eigenspaces of `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralComponent {
    pub eigenvalue: f64,
    /// Orthogonal projection of the target onto this eigenspace.
    pub projection: CVec,
    /// A unit vector of the eigenspace, needed only for the hard case.
    pub direction: Option<CVec>,
}

/// The same problem expressed in an eigenbasis of `Q`. The projections must sum
/// to the target and be mutually orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralQcqp {
    pub components: Vec<SpectralComponent>,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcqpCase {
    /// Target already feasible, multiplier zero.
    Inactive,
    /// Constraint active with `I + mu Q` positive definite.
    Boundary,
    /// Constraint active with `I + mu Q` singular; completed along the critical eigenspace.
    HardCase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcqpSolution {
    pub x: CVec,
    /// Lagrange multiplier (`+inf` when the feasible set is the null space of a PSD `Q`).
    pub mu: f64,
    pub case: QcqpCase,
}

impl QcqpOneProblem {
    pub fn to_spectral(&self) -> SpectralQcqp {
        let (vals, vecs) = herm_eig(&self.quad);
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let components = vals
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let u = vecs.column(k).into_owned();
                let coef = u.dotc(&self.target);
                SpectralComponent {
                    eigenvalue: if l.abs() <= 1e-14 * scale { 0.0 } else { l },
                    projection: &u * coef,
                    direction: Some(u),
                }
            })
            .collect();
        SpectralQcqp { components, bound: self.bound }
    }
}

pub fn solve_qcqp1(p: &QcqpOneProblem) -> Result<QcqpSolution> {
    solve_qcqp1_spectral(&p.to_spectral())
}

pub fn solve_qcqp1_spectral(p: &SpectralQcqp) -> Result<QcqpSolution> {
    let comps = &p.components;
    let c = p.bound;
    let mass: Vec<f64> = comps.iter().map(|s| norm2(&s.projection)).collect();
    let total_mass: f64 = mass.iter().sum();
    let g = |mu: f64, skip: &dyn Fn(usize) -> bool| -> f64 {
        let mut q = 0.0;
        for (k, s) in comps.iter().enumerate() {
            if skip(k) || mass[k] == 0.0 {
                continue;
            }
            let d = 1.0 + mu * s.eigenvalue;
            q += s.eigenvalue * mass[k] / (d * d);
        }
        q - c
    };
    let assemble = |mu: f64, skip: &dyn Fn(usize) -> bool| -> CVec {
        let n = comps.first().map_or(0, |s| s.projection.len());
        let mut x = CVec::zeros(n);
        for (k, s) in comps.iter().enumerate() {
            if skip(k) || mass[k] == 0.0 {
                continue;
            }
            x += &s.projection * cx(1.0 / (1.0 + mu * s.eigenvalue));
        }
        x
    };
    let none = |_: usize| false;

    let target = assemble(0.0, &none);
    if g(0.0, &none) <= 0.0 {
        return Ok(QcqpSolution { x: target, mu: 0.0, case: QcqpCase::Inactive });
    }
    let lmin = comps.iter().map(|s| s.eigenvalue).fold(f64::INFINITY, f64::min);
    let lscale = comps.iter().fold(0.0f64, |m, s| m.max(s.eigenvalue.abs()));

    if lmin < 0.0 {
        let mu_max = -1.0 / lmin;
        let is_crit = |k: usize| comps[k].eigenvalue <= lmin + 1e-12 * lscale;
        let crit_mass: f64 = (0..comps.len()).filter(|&k| is_crit(k)).map(|k| mass[k]).sum();
        let rest = g(mu_max, &is_crit);
        if crit_mass <= 1e-20 * total_mass.max(1e-300) && rest >= 0.0 {
            let dir = comps
                .iter()
                .enumerate()
                .find(|(k, s)| is_crit(*k) && s.direction.is_some())
                .and_then(|(_, s)| s.direction.clone())
                .ok_or(Error::Infeasible)?;
            let s = (rest / -lmin).sqrt();
            let x = assemble(mu_max, &is_crit) + dir * cx(s);
            return Ok(QcqpSolution { x, mu: mu_max, case: QcqpCase::HardCase });
        }
        let mu = bisect(|m| g(m, &none), 0.0, mu_max);
        return Ok(QcqpSolution { x: assemble(mu, &none), mu, case: QcqpCase::Boundary });
    }

    // Q positive semidefinite.
    if c < 0.0 {
        return Err(Error::Infeasible);
    }
    if c == 0.0 {
        let x = assemble(0.0, &|k| comps[k].eigenvalue > 0.0);
        return Ok(QcqpSolution { x, mu: f64::INFINITY, case: QcqpCase::Boundary });
    }
    let mut hi = 1.0 / lscale.max(1e-300);
    while g(hi, &none) > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Infeasible);
        }
    }
    let mu = bisect(|m| g(m, &none), 0.0, hi);
    Ok(QcqpSolution { x: assemble(mu, &none), mu, case: QcqpCase::Boundary })
}

/// Root of a decreasing function with `f(lo) > 0`, returning a point with `f <= 0`.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(hi) > 0.0 {
        // Pole reached in floating point; hi is as close as representable.
        return hi;
    }
    hi
}
