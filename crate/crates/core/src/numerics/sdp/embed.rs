//! Compile a complex [`SdpProblem`] into the real standard form used by the IPM.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{HermCoef, LinearFunctional, SdpProblem};
use crate::linalg::{CMat, CVec, C64};

/// Symmetric coefficient of one real PSD block.
#[derive(Debug, Clone)]
pub(crate) enum RealSym {
    Dense(DMatrix<f64>),
    /// Entries of the full symmetric matrix (both triangles listed).
    Sparse(Vec<(usize, usize, f64)>),
}

impl RealSym {
    pub fn inner(&self, x: &DMatrix<f64>) -> f64 {
        match self {
            RealSym::Dense(a) => a.dot(x),
            RealSym::Sparse(t) => t.iter().map(|&(i, j, v)| v * x[(i, j)]).sum(),
        }
    }

    pub fn add_to(&self, dst: &mut DMatrix<f64>, scale: f64) {
        match self {
            RealSym::Dense(a) => *dst += a * scale,
            RealSym::Sparse(t) => {
                for &(i, j, v) in t {
                    dst[(i, j)] += scale * v;
                }
            }
        }
    }

    pub fn fro2(&self) -> f64 {
        match self {
            RealSym::Dense(a) => a.norm_squared(),
            RealSym::Sparse(t) => t.iter().map(|e| e.2 * e.2).sum(),
        }
    }
}

/// One linear functional of the real problem.
#[derive(Debug, Clone, Default)]
pub(crate) struct RealCon {
    pub psd: Vec<(usize, RealSym)>,
    pub lp: Vec<(usize, f64)>,
}

/// `min <C, X>  s.t.  <A_i, X> = b_i,  X ⪰ 0` over PSD blocks and a nonnegative orthant.
#[derive(Debug, Clone)]
pub(crate) struct RealSdp {
    pub dims: Vec<usize>,
    pub n_lp: usize,
    pub c: RealCon,
    pub a: Vec<RealCon>,
    pub b: Vec<f64>,
}

/// Complex entries of a Hermitian coefficient, keyed by (row, col).
fn complex_entries(coef: &HermCoef, n: usize, out: &mut BTreeMap<(usize, usize), C64>) {
    let mut push = |i: usize, j: usize, z: C64| {
        if z != C64::new(0.0, 0.0) {
            *out.entry((i, j)).or_insert(C64::new(0.0, 0.0)) += z;
        }
    };
    match coef {
        HermCoef::Dense(m) => {
            for j in 0..n {
                for i in 0..n {
                    push(i, j, m[(i, j)]);
                }
            }
        }
        HermCoef::Identity(s) => {
            for i in 0..n {
                push(i, i, C64::new(*s, 0.0));
            }
        }
        HermCoef::Rank2 { a, b, s } => {
            let nz = |v: &CVec| -> Vec<usize> { (0..v.len()).filter(|&k| v[k].norm() != 0.0).collect() };
            let (na, nb) = (nz(a), nz(b));
            for &i in &na {
                for &j in &nb {
                    push(i, j, a[i] * b[j].conj() * *s * 0.5);
                    push(j, i, b[j] * a[i].conj() * s.conj() * 0.5);
                }
            }
        }
    }
}

/// Real embedding of `Tr(C X)`: coefficient `C_r / 2` on the `2n x 2n` block.
fn embed_coef(entries: &BTreeMap<(usize, usize), C64>, n: usize) -> RealSym {
    let mut real: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut add = |i: usize, j: usize, v: f64| {
        if v != 0.0 {
            *real.entry((i, j)).or_insert(0.0) += v;
        }
    };
    for (&(i, j), z) in entries {
        add(i, j, 0.5 * z.re);
        add(i + n, j + n, 0.5 * z.re);
        add(i + n, j, 0.5 * z.im);
        add(i, j + n, -0.5 * z.im);
    }
    let dim = 2 * n;
    if real.len() * 3 > dim * dim {
        let mut m = DMatrix::zeros(dim, dim);
        for ((i, j), v) in real {
            m[(i, j)] = v;
        }
        RealSym::Dense(m)
    } else {
        RealSym::Sparse(real.into_iter().map(|((i, j), v)| (i, j, v)).collect())
    }
}

struct Builder<'a> {
    dims: &'a [usize],
}

impl Builder<'_> {
    fn functional(&self, f: &LinearFunctional) -> RealCon {
        let mut per_block: BTreeMap<usize, BTreeMap<(usize, usize), C64>> = BTreeMap::new();
        for (b, coef) in &f.blocks {
            complex_entries(coef, self.dims[*b], per_block.entry(*b).or_default());
        }
        let psd = per_block
            .into_iter()
            .filter(|(_, e)| !e.is_empty())
            .map(|(b, e)| (b, embed_coef(&e, self.dims[b])))
            .collect();
        let mut lp: BTreeMap<usize, f64> = BTreeMap::new();
        for &(s, c) in &f.scalars {
            *lp.entry(s).or_insert(0.0) += c;
        }
        RealCon { psd, lp: lp.into_iter().filter(|e| e.1 != 0.0).collect() }
    }
}

fn unit(n: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[k] = C64::new(1.0, 0.0);
    v
}

pub(crate) fn compile(p: &SdpProblem) -> RealSdp {
    let nb = p.block_dims.len();
    let mut dims: Vec<usize> = p.block_dims.clone();
    dims.extend(p.lmis.iter().map(|l| l.dim));
    let builder = Builder { dims: &dims };

    let n_ineq = p.ineq_constraints.len();
    let n_lp = p.scalar_vars + n_ineq;
    let mut a = Vec::new();
    let mut b = Vec::new();

    for (f, rhs) in &p.eq_constraints {
        a.push(builder.functional(f));
        b.push(*rhs);
    }
    for (k, (f, rhs)) in p.ineq_constraints.iter().enumerate() {
        let mut con = builder.functional(f);
        con.lp.push((p.scalar_vars + k, 1.0));
        a.push(con);
        b.push(*rhs);
    }
    for (l_idx, lmi) in p.lmis.iter().enumerate() {
        let wb = nb + l_idx;
        let d = lmi.dim;
        for c in 0..d {
            for r in 0..=c {
                for imag in [false, true] {
                    if imag && r == c {
                        continue;
                    }
                    let rot = if imag { C64::new(0.0, -1.0) } else { C64::new(1.0, 0.0) };
                    let mut f = LinearFunctional::new().block(
                        wb,
                        HermCoef::Rank2 { a: unit(d, c), b: unit(d, r), s: rot },
                    );
                    for (blk, coef, e) in &lmi.block_terms {
                        f.blocks.push((
                            *blk,
                            HermCoef::Rank2 {
                                a: e.column(c).into_owned(),
                                b: e.column(r).into_owned(),
                                s: rot * (-coef),
                            },
                        ));
                    }
                    for (s, ms) in &lmi.scalar_terms {
                        let z = ms[(r, c)];
                        f.scalars.push((*s, -if imag { z.im } else { z.re }));
                    }
                    let z = lmi.constant[(r, c)];
                    a.push(builder.functional(&f));
                    b.push(if imag { z.im } else { z.re });
                }
            }
        }
    }
    let c = builder.functional(&p.objective);
    let real_dims = dims.iter().map(|d| 2 * d).collect();
    RealSdp { dims: real_dims, n_lp, c, a, b }
}

/// Recover the complex Hermitian matrix from its `2n x 2n` real embedding.
pub(crate) fn complex_block(x: &DMatrix<f64>, n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + n, j + n)]);
        let im = 0.5 * (x[(i + n, j)] - x[(i, j + n)]);
        C64::new(re, im)
    })
}
