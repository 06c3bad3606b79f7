use crate::numerics::quad::gauss_legendre;

/// Generalized Marcum Q function of order 1, `Q1(a, b)`.
///
/// Uses the Bessel series when `a*b <= 30` and Gauss-Legendre quadrature of the
/// Rician tail otherwise. Absolute accuracy is about 1e-13.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    if !(b > 0.0) {
        return 1.0;
    }
    if !(a > 0.0) {
        return (-0.5 * b * b).exp();
    }
    if a * b <= 30.0 {
        series(a, b)
    } else {
        tail_quadrature(a, b)
    }
}

fn series(a: f64, b: f64) -> f64 {
    let x = a * b;
    let lnfact = ln_factorials(400);
    let gauss = (-0.5 * (a - b) * (a - b)).exp();
    let (ratio, first) = if a < b { (a / b, 0) } else { (b / a, 1) };
    let mut sum = 0.0;
    let mut k = first;
    loop {
        let term = ratio.powi(k as i32) * scaled_bessel_i(k, x, &lnfact);
        sum += term;
        if (term < 1e-18 * sum.max(1e-300) && k as f64 > x) || k >= 300 {
            break;
        }
        k += 1;
    }
    if a < b {
        (gauss * sum).clamp(0.0, 1.0)
    } else {
        (1.0 - gauss * sum).clamp(0.0, 1.0)
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for i in 1..=n {
        t[i] = t[i - 1] + (i as f64).ln();
    }
    t
}

/// `I_k(x) exp(-x)` by its power series, summed in log space.
fn scaled_bessel_i(k: usize, x: f64, lnfact: &[f64]) -> f64 {
    let lx = (0.5 * x).ln();
    let mut sum = 0.0;
    for m in 0..(lnfact.len() - k - 1) {
        let e = (2 * m + k) as f64 * lx - lnfact[m] - lnfact[m + k] - x;
        let term = e.exp();
        sum += term;
        if term < 1e-18 * sum && m as f64 > 0.5 * x {
            break;
        }
    }
    sum
}

/// `I_0(x) exp(-x)` for `x >= 0`.
pub(crate) fn scaled_i0(x: f64) -> f64 {
    if x < 30.0 {
        let q = 0.25 * x * x;
        let mut term = (-x).exp();
        let mut sum = term;
        let mut m = 1.0;
        while term > 1e-18 * sum {
            term *= q / (m * m);
            sum += term;
            m += 1.0;
        }
        sum
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            let next = term * (2.0 * kf - 1.0).powi(2) / (8.0 * kf * x);
            if next > term || next < 1e-18 {
                break;
            }
            term = next;
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

fn tail_quadrature(a: f64, b: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(16);
    let upper = a.max(b) + 40.0;
    if b >= upper {
        return 0.0;
    }
    let f = |x: f64| x * (-0.5 * (x - a) * (x - a)).exp() * scaled_i0(a * x);
    let panels = ((upper - b) / 0.5).ceil() as usize;
    let h = (upper - b) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = b + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (t, w) in nodes.iter().zip(&weights) {
            total += w * f(mid + 0.5 * h * t);
        }
    }
    (0.5 * h * total).clamp(0.0, 1.0)
}
