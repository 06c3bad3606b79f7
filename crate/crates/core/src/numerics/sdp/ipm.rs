//! Primal-dual interior-point method (HKM direction, Mehrotra predictor-corrector)
//! for real SDPs in standard form with a nonnegative-orthant part.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::embed::{RealCon, RealSdp, RealSym};
use super::SdpStatus;
use crate::linalg::sym_eig;

#[derive(Debug, Clone, PartialEq)]
pub struct IpmOptions {
    pub max_iter: usize,
    /// Relative duality gap target.
    pub gap_tol: f64,
    /// Relative primal and dual residual target.
    pub feas_tol: f64,
    /// Fraction of the step to the boundary.
    pub step_fraction: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self { max_iter: 200, gap_tol: 1e-9, feas_tol: 1e-9, step_fraction: 0.98 }
    }
}

pub(crate) struct IpmOutput {
    pub x: Vec<DMatrix<f64>>,
    pub x_lp: Vec<f64>,
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub gap: f64,
}

#[derive(Clone)]
struct Point {
    x: Vec<DMatrix<f64>>,
    xl: DVector<f64>,
    y: DVector<f64>,
    z: Vec<DMatrix<f64>>,
    zl: DVector<f64>,
}

struct Data {
    dims: Vec<usize>,
    n_lp: usize,
    m: usize,
    b: DVector<f64>,
    c_psd: Vec<Option<RealSym>>,
    c_lp: DVector<f64>,
    /// Per block: (constraint index, coefficient).
    by_block: Vec<Vec<(usize, RealSym)>>,
    /// Per orthant coordinate: (constraint index, coefficient).
    by_lp: Vec<Vec<(usize, f64)>>,
}

fn scaled(s: &RealSym, f: f64) -> RealSym {
    match s {
        RealSym::Dense(a) => RealSym::Dense(a * f),
        RealSym::Sparse(t) => RealSym::Sparse(t.iter().map(|&(i, j, v)| (i, j, v * f)).collect()),
    }
}

fn con_norm(c: &RealCon) -> f64 {
    let s: f64 = c.psd.iter().map(|(_, a)| a.fro2()).sum::<f64>()
        + c.lp.iter().map(|(_, v)| v * v).sum::<f64>();
    s.sqrt()
}

impl Data {
    fn new(p: &RealSdp) -> Self {
        let nb = p.dims.len();
        let m = p.a.len();
        let mut by_block: Vec<Vec<(usize, RealSym)>> = vec![Vec::new(); nb];
        let mut by_lp: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.n_lp];
        let mut b = DVector::zeros(m);
        for (i, con) in p.a.iter().enumerate() {
            let s = 1.0 / con_norm(con).max(1e-300);
            for (blk, a) in &con.psd {
                by_block[*blk].push((i, scaled(a, s)));
            }
            for &(k, v) in &con.lp {
                by_lp[k].push((i, v * s));
            }
            b[i] = p.b[i] * s;
        }
        let cs = 1.0 / con_norm(&p.c).max(1.0);
        let mut c_psd: Vec<Option<RealSym>> = vec![None; nb];
        for (blk, a) in &p.c.psd {
            c_psd[*blk] = Some(scaled(a, cs));
        }
        let mut c_lp = DVector::zeros(p.n_lp);
        for &(k, v) in &p.c.lp {
            c_lp[k] += v * cs;
        }
        Self { dims: p.dims.clone(), n_lp: p.n_lp, m, b, c_psd, c_lp, by_block, by_lp }
    }

    fn apply_a(&self, x: &[DMatrix<f64>], xl: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (blk, cons) in self.by_block.iter().enumerate() {
            for (i, a) in cons {
                out[*i] += a.inner(&x[blk]);
            }
        }
        for (k, col) in self.by_lp.iter().enumerate() {
            for &(i, v) in col {
                out[i] += v * xl[k];
            }
        }
        out
    }

    fn apply_at(&self, y: &DVector<f64>) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        let mut mats: Vec<DMatrix<f64>> = self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (blk, cons) in self.by_block.iter().enumerate() {
            for (i, a) in cons {
                a.add_to(&mut mats[blk], y[*i]);
            }
        }
        let mut lp = DVector::zeros(self.n_lp);
        for (k, col) in self.by_lp.iter().enumerate() {
            lp[k] = col.iter().map(|&(i, v)| v * y[i]).sum();
        }
        (mats, lp)
    }

    fn c_mat(&self, blk: usize) -> DMatrix<f64> {
        let n = self.dims[blk];
        let mut m = DMatrix::zeros(n, n);
        if let Some(c) = &self.c_psd[blk] {
            c.add_to(&mut m, 1.0);
        }
        m
    }

    fn primal_obj(&self, x: &[DMatrix<f64>], xl: &DVector<f64>) -> f64 {
        let mut v = self.c_lp.dot(xl);
        for (blk, c) in self.c_psd.iter().enumerate() {
            if let Some(c) = c {
                v += c.inner(&x[blk]);
            }
        }
        v
    }

    fn order(&self) -> f64 {
        (self.dims.iter().sum::<usize>() + self.n_lp) as f64
    }

    /// Schur complement `M_ij = <A_i, X A_j Z^-1> + sum_k a_ik a_jk x_k / z_k`.
    fn schur(&self, x: &[DMatrix<f64>], zinv: &[DMatrix<f64>], xl: &DVector<f64>, zl: &DVector<f64>) -> DMatrix<f64> {
        let mut mm = DMatrix::zeros(self.m, self.m);
        for (blk, cons) in self.by_block.iter().enumerate() {
            let n = self.dims[blk];
            let xb = &x[blk];
            let zb = &zinv[blk];
            // Products X A_j Z^-1 for coefficients with many entries.
            let g: Vec<Option<DMatrix<f64>>> = cons
                .iter()
                .map(|(_, a)| {
                    let heavy = match a {
                        RealSym::Dense(_) => true,
                        RealSym::Sparse(t) => t.len() > 2 * n,
                    };
                    if heavy {
                        let mut az = DMatrix::zeros(n, n);
                        match a {
                            RealSym::Dense(d) => az = d * zb,
                            RealSym::Sparse(t) => {
                                for &(r, cc, v) in t {
                                    for k in 0..n {
                                        az[(r, k)] += v * zb[(cc, k)];
                                    }
                                }
                            }
                        }
                        Some(xb * az)
                    } else {
                        None
                    }
                })
                .collect();
            for p in 0..cons.len() {
                let (i, ai) = &cons[p];
                for q in p..cons.len() {
                    let (j, aj) = &cons[q];
                    let v = if let Some(gj) = &g[q] {
                        ai.inner(gj)
                    } else if let Some(gi) = &g[p] {
                        aj.inner(gi)
                    } else {
                        sparse_pair(ai, aj, xb, zb)
                    };
                    mm[(*i, *j)] += v;
                    if i != j {
                        mm[(*j, *i)] += v;
                    }
                }
            }
        }
        for (k, col) in self.by_lp.iter().enumerate() {
            let d = xl[k] / zl[k];
            for &(i, a) in col {
                for &(j, b) in col {
                    mm[(i, j)] += a * b * d;
                }
            }
        }
        mm
    }
}

fn sparse_pair(ai: &RealSym, aj: &RealSym, x: &DMatrix<f64>, zinv: &DMatrix<f64>) -> f64 {
    let (RealSym::Sparse(ti), RealSym::Sparse(tj)) = (ai, aj) else {
        unreachable!("dense coefficients use the product path")
    };
    let mut s = 0.0;
    for &(a, b, v) in ti {
        for &(c, d, u) in tj {
            s += v * u * x[(a, c)] * zinv[(d, b)];
        }
    }
    s
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest `a` with `X + a dX ⪰ 0` (infinite if `dX ⪰ 0`).
fn max_step_psd(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    let Some(ch) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = ch.l();
    let t = l.solve_lower_triangular(dx).unwrap_or_else(|| DMatrix::zeros(n, n));
    let t = l.solve_lower_triangular(&t.transpose()).unwrap_or_else(|| DMatrix::zeros(n, n));
    let (vals, _) = sym_eig(&t);
    let lmin = vals[0];
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    let mut a = f64::INFINITY;
    for k in 0..x.len() {
        if dx[k] < 0.0 {
            a = a.min(-x[k] / dx[k]);
        }
    }
    a
}

fn inner_all(a: &[DMatrix<f64>], al: &DVector<f64>, b: &[DMatrix<f64>], bl: &DVector<f64>) -> f64 {
    a.iter().zip(b).map(|(p, q)| p.dot(q)).sum::<f64>() + al.dot(bl)
}

fn fro_all(a: &[DMatrix<f64>], al: &DVector<f64>) -> f64 {
    (a.iter().map(|m| m.norm_squared()).sum::<f64>() + al.norm_squared()).sqrt()
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dxl: DVector<f64>,
    dy: DVector<f64>,
    dz: Vec<DMatrix<f64>>,
    dzl: DVector<f64>,
}

pub(crate) fn solve(p: &RealSdp, opts: &IpmOptions) -> IpmOutput {
    let data = Data::new(p);
    let nb = data.dims.len();
    let big_n = data.order().max(1.0);

    // Starting point: scaled identities.
    let mut pt = {
        let mut x = Vec::with_capacity(nb);
        let mut z = Vec::with_capacity(nb);
        for blk in 0..nb {
            let n = data.dims[blk];
            let nf = n as f64;
            let mut xi = 10f64.max(nf.sqrt());
            let mut eta = 10f64.max(nf.sqrt());
            for (i, a) in &data.by_block[blk] {
                let na = a.fro2().sqrt();
                xi = xi.max(nf * (1.0 + data.b[*i].abs()) / (1.0 + na));
                eta = eta.max(na);
            }
            if let Some(c) = &data.c_psd[blk] {
                eta = eta.max(c.fro2().sqrt());
            }
            x.push(DMatrix::identity(n, n) * xi);
            z.push(DMatrix::identity(n, n) * eta);
        }
        let nl = data.n_lp as f64;
        let mut xi = 10f64.max(nl.sqrt());
        let mut eta = 10f64.max(nl.sqrt());
        for col in &data.by_lp {
            for &(i, v) in col {
                xi = xi.max((1.0 + data.b[i].abs()) / (1.0 + v.abs()));
                eta = eta.max(v.abs());
            }
        }
        eta = eta.max(data.c_lp.norm());
        Point {
            x,
            xl: DVector::from_element(data.n_lp, xi),
            y: DVector::zeros(data.m),
            z,
            zl: DVector::from_element(data.n_lp, eta),
        }
    };

    let b_norm = data.b.norm();
    let c_mats: Vec<DMatrix<f64>> = (0..nb).map(|blk| data.c_mat(blk)).collect();
    let c_norm = fro_all(&c_mats, &data.c_lp);

    let mut best: Option<(f64, Point, f64, f64)> = None;
    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut stalls = 0;
    let mut last_progress = 0;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let ax = data.apply_a(&pt.x, &pt.xl);
        let rp = &data.b - ax;
        let (aty, aty_l) = data.apply_at(&pt.y);
        let rd: Vec<DMatrix<f64>> = (0..nb).map(|blk| &c_mats[blk] - &pt.z[blk] - &aty[blk]).collect();
        let rd_l = &data.c_lp - &pt.zl - &aty_l;

        let pobj = data.primal_obj(&pt.x, &pt.xl);
        let dobj = data.b.dot(&pt.y);
        let xz = inner_all(&pt.x, &pt.xl, &pt.z, &pt.zl);
        let mu = xz / big_n;
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = fro_all(&rd, &rd_l) / (1.0 + c_norm);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        let gap = (xz / denom).max((pobj - dobj).abs() / denom);
        let merit = pinf.max(dinf).max(gap);
        if best.as_ref().is_none_or(|b| merit < 0.9 * b.0) {
            last_progress = iter;
        }
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, pt.clone(), pinf, gap));
        }
        if pinf <= opts.feas_tol && dinf <= opts.feas_tol && gap <= opts.gap_tol {
            status = SdpStatus::Optimal;
            break;
        }
        // Certificates of infeasibility along diverging iterates.
        let aty_z: Vec<DMatrix<f64>> = (0..nb).map(|blk| &aty[blk] + &pt.z[blk]).collect();
        let ray_d = fro_all(&aty_z, &(&aty_l + &pt.zl));
        if dobj > 0.0 && ray_d <= 1e-8 * dobj && pinf > opts.feas_tol {
            status = SdpStatus::Infeasible;
            break;
        }
        if pobj < 0.0 && data.apply_a(&pt.x, &pt.xl).norm() <= 1e-8 * -pobj && dinf > opts.feas_tol {
            status = SdpStatus::Unbounded;
            break;
        }
        if iter >= last_progress + 15 || stalls >= 8 {
            status = SdpStatus::Stalled;
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let mut zinv = Vec::with_capacity(nb);
        let mut ok = true;
        for zb in &pt.z {
            match Cholesky::new(zb.clone()) {
                Some(ch) => zinv.push(ch.inverse()),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        let mut mm = data.schur(&pt.x, &zinv, &pt.xl, &pt.zl);
        let chol = {
            let mut reg = 0.0;
            let maxd = (0..data.m).map(|i| mm[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
            loop {
                if let Some(ch) = Cholesky::new(mm.clone()) {
                    break Some(ch);
                }
                reg = if reg == 0.0 { 1e-14 * maxd } else { reg * 100.0 };
                if reg > 1e-4 * maxd {
                    break None;
                }
                for i in 0..data.m {
                    mm[(i, i)] += reg;
                }
            }
        };
        let Some(chol) = chol else { break };

        // X Rd Z^-1 part of the right-hand side, shared by both solves.
        let xrdz: Vec<DMatrix<f64>> = (0..nb).map(|blk| &pt.x[blk] * &rd[blk] * &zinv[blk]).collect();
        let xrdz_l = DVector::from_fn(data.n_lp, |k, _| pt.xl[k] * rd_l[k] / pt.zl[k]);
        let base_rhs = &data.b + data.apply_a(&xrdz, &xrdz_l);

        let direction = |kz: &[DMatrix<f64>], kz_l: &DVector<f64>| -> Direction {
            let rhs = &base_rhs - data.apply_a(kz, kz_l);
            let dy = chol.solve(&rhs);
            let (atdy, atdy_l) = data.apply_at(&dy);
            let dz: Vec<DMatrix<f64>> = (0..nb).map(|blk| &rd[blk] - &atdy[blk]).collect();
            let dzl = &rd_l - atdy_l;
            let dx: Vec<DMatrix<f64>> = (0..nb)
                .map(|blk| sym(&(&kz[blk] - &pt.x[blk] * &dz[blk] * &zinv[blk])) - &pt.x[blk])
                .collect();
            let dxl = DVector::from_fn(data.n_lp, |k, _| {
                kz_l[k] - pt.xl[k] - pt.xl[k] * dzl[k] / pt.zl[k]
            });
            Direction { dx, dxl, dy, dz, dzl }
        };
        let steps = |d: &Direction| -> (f64, f64) {
            let mut ap = max_step_lp(&pt.xl, &d.dxl);
            let mut ad = max_step_lp(&pt.zl, &d.dzl);
            for blk in 0..nb {
                ap = ap.min(max_step_psd(&pt.x[blk], &d.dx[blk]));
                ad = ad.min(max_step_psd(&pt.z[blk], &d.dz[blk]));
            }
            (ap, ad)
        };

        // Predictor.
        let zero: Vec<DMatrix<f64>> = data.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let zero_l = DVector::zeros(data.n_lp);
        let pred = direction(&zero, &zero_l);
        let (ap, ad) = steps(&pred);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let xa: Vec<DMatrix<f64>> = (0..nb).map(|blk| &pt.x[blk] + &pred.dx[blk] * ap).collect();
        let za: Vec<DMatrix<f64>> = (0..nb).map(|blk| &pt.z[blk] + &pred.dz[blk] * ad).collect();
        let mu_aff = inner_all(&xa, &(&pt.xl + &pred.dxl * ap), &za, &(&pt.zl + &pred.dzl * ad)) / big_n;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector with second-order term.
        let kz: Vec<DMatrix<f64>> = (0..nb)
            .map(|blk| {
                let n = data.dims[blk];
                (DMatrix::identity(n, n) * (sigma * mu) - &pred.dx[blk] * &pred.dz[blk]) * &zinv[blk]
            })
            .collect();
        let kz_l = DVector::from_fn(data.n_lp, |k, _| {
            (sigma * mu - pred.dxl[k] * pred.dzl[k]) / pt.zl[k]
        });
        let corr = direction(&kz, &kz_l);
        let (ap, ad) = steps(&corr);
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
        }
        for blk in 0..nb {
            pt.x[blk] = sym(&(&pt.x[blk] + &corr.dx[blk] * ap));
            pt.z[blk] = sym(&(&pt.z[blk] + &corr.dz[blk] * ad));
        }
        pt.xl += &corr.dxl * ap;
        pt.zl += &corr.dzl * ad;
        pt.y += &corr.dy * ad;
    }

    let (_, out_pt, pinf, gap) = match (&status, best) {
        (SdpStatus::Optimal, _) | (_, None) => {
            let ax = data.apply_a(&pt.x, &pt.xl);
            let pinf = (&data.b - ax).norm() / (1.0 + b_norm);
            let pobj = data.primal_obj(&pt.x, &pt.xl);
            let dobj = data.b.dot(&pt.y);
            (0.0, pt, pinf, (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()))
        }
        (_, Some(b)) => b,
    };
    IpmOutput {
        x: out_pt.x,
        x_lp: out_pt.xl.iter().copied().collect(),
        status,
        iterations,
        primal_residual: pinf,
        gap,
    }
}
