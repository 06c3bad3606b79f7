//! Dense complex SDP: Hermitian PSD blocks, nonnegative scalars, linear
//! equalities and inequalities, and linear matrix inequalities.
//!
//! The problem is embedded into a real symmetric SDP (`n x n` Hermitian block ->
//! `2n x 2n` real block) and solved by a primal-dual interior-point method.

mod embed;
mod ipm;

use crate::linalg::{CMat, CVec, C64};

pub use ipm::IpmOptions;

/// Hermitian coefficient matrix of a trace inner product `Tr(C X)`.
#[derive(Debug, Clone, PartialEq)]
pub enum HermCoef {
    Dense(CMat),
    /// `s I`.
    Identity(f64),
    /// `(s a b^H + conj(s) b a^H) / 2`.
    Rank2 { a: CVec, b: CVec, s: C64 },
}

impl HermCoef {
    /// `scale * v v^H`.
    pub fn outer(v: &CVec, scale: f64) -> Self {
        HermCoef::Rank2 { a: v.clone(), b: v.clone(), s: C64::new(scale, 0.0) }
    }

    pub fn to_dense(&self, n: usize) -> CMat {
        match self {
            HermCoef::Dense(m) => m.clone(),
            HermCoef::Identity(s) => CMat::identity(n, n) * C64::new(*s, 0.0),
            HermCoef::Rank2 { a, b, s } => {
                (a * b.adjoint() * *s + b * a.adjoint() * s.conj()) * C64::new(0.5, 0.0)
            }
        }
    }

    /// `Tr(C X)` for Hermitian `X`.
    pub fn inner(&self, x: &CMat) -> f64 {
        match self {
            HermCoef::Dense(m) => m.iter().zip(x.transpose().iter()).map(|(a, b)| (a * b).re).sum(),
            HermCoef::Identity(s) => s * x.diagonal().iter().map(|z| z.re).sum::<f64>(),
            HermCoef::Rank2 { a, b, s } => {
                let xab = b.dotc(&(x * a));
                (s * xab).re
            }
        }
    }
}

/// `sum_b Tr(C_b X_b) + sum_s c_s x_s`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearFunctional {
    pub blocks: Vec<(usize, HermCoef)>,
    pub scalars: Vec<(usize, f64)>,
}

impl LinearFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn block(mut self, b: usize, c: HermCoef) -> Self {
        self.blocks.push((b, c));
        self
    }

    pub fn scalar(mut self, s: usize, c: f64) -> Self {
        self.scalars.push((s, c));
        self
    }

    pub fn eval(&self, blocks: &[CMat], scalars: &[f64]) -> f64 {
        let mut v: f64 = self.blocks.iter().map(|(b, c)| c.inner(&blocks[*b])).sum();
        v += self.scalars.iter().map(|(s, c)| c * scalars[*s]).sum::<f64>();
        v
    }
}

/// `constant + sum coef * E^H X_b E + sum x_s M_s ⪰ 0` with `E` of size `n_b x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lmi {
    pub dim: usize,
    pub constant: CMat,
    pub block_terms: Vec<(usize, f64, CMat)>,
    pub scalar_terms: Vec<(usize, CMat)>,
}

impl Lmi {
    pub fn eval(&self, blocks: &[CMat], scalars: &[f64]) -> CMat {
        let mut m = self.constant.clone();
        for (b, coef, e) in &self.block_terms {
            m += e.adjoint() * &blocks[*b] * e * C64::new(*coef, 0.0);
        }
        for (s, ms) in &self.scalar_terms {
            m += ms * C64::new(scalars[*s], 0.0);
        }
        m
    }
}

/// Minimize `objective` over PSD blocks and nonnegative scalars subject to
/// `f(x) = rhs` (equalities), `f(x) <= rhs` (inequalities) and the LMIs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    pub scalar_vars: usize,
    pub objective: LinearFunctional,
    pub eq_constraints: Vec<(LinearFunctional, f64)>,
    pub ineq_constraints: Vec<(LinearFunctional, f64)>,
    pub lmis: Vec<Lmi>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    /// No progress for many iterations; the best iterate is returned.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub blocks: Vec<CMat>,
    pub scalars: Vec<f64>,
    pub objective: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Relative primal residual `|b - A(x)| / (1 + |b|)` of the real problem.
    pub primal_residual: f64,
    /// Relative duality gap at exit.
    pub gap: f64,
}

impl SdpProblem {
    /// Replace block `b` by `t u u^H` with a scalar `t >= 0` (a 1x1 block).
    pub fn restrict_block(&self, b: usize, u: &CVec) -> SdpProblem {
        let map_fn = |f: &LinearFunctional| LinearFunctional {
            blocks: f
                .blocks
                .iter()
                .map(|(blk, coef)| {
                    if *blk == b {
                        let v = coef.inner(&(u * u.adjoint()));
                        (b, HermCoef::Dense(CMat::from_element(1, 1, C64::new(v, 0.0))))
                    } else {
                        (*blk, coef.clone())
                    }
                })
                .collect(),
            scalars: f.scalars.clone(),
        };
        let mut out = self.clone();
        out.block_dims[b] = 1;
        out.objective = map_fn(&self.objective);
        out.eq_constraints = self.eq_constraints.iter().map(|(f, r)| (map_fn(f), *r)).collect();
        out.ineq_constraints = self.ineq_constraints.iter().map(|(f, r)| (map_fn(f), *r)).collect();
        for lmi in &mut out.lmis {
            for (blk, _, e) in &mut lmi.block_terms {
                if *blk == b {
                    let row = u.adjoint() * &*e;
                    *e = CMat::from_row_slice(1, row.len(), row.as_slice());
                }
            }
        }
        out
    }

    /// Largest violation of any equality or inequality at the given point.
    pub fn max_violation(&self, blocks: &[CMat], scalars: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (f, rhs) in &self.eq_constraints {
            worst = worst.max((f.eval(blocks, scalars) - rhs).abs());
        }
        for (f, rhs) in &self.ineq_constraints {
            worst = worst.max(f.eval(blocks, scalars) - rhs);
        }
        worst
    }
}

pub fn solve_sdp(p: &SdpProblem) -> SdpSolution {
    solve_sdp_with(p, &IpmOptions::default())
}

pub fn solve_sdp_with(p: &SdpProblem, opts: &IpmOptions) -> SdpSolution {
    let real = embed::compile(p);
    let out = ipm::solve(&real, opts);
    let blocks: Vec<CMat> = (0..p.block_dims.len())
        .map(|b| embed::complex_block(&out.x[b], p.block_dims[b]))
        .collect();
    let scalars: Vec<f64> = out.x_lp[..p.scalar_vars].to_vec();
    let objective = p.objective.eval(&blocks, &scalars);
    SdpSolution {
        blocks,
        scalars,
        objective,
        status: out.status,
        iterations: out.iterations,
        primal_residual: out.primal_residual,
        gap: out.gap,
    }
}
