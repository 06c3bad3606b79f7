use crate::error::{Error, Result};
use crate::linalg::{c, canonical_phase, herm_eig, CMat, CVec};

/// Unit-norm maximizer of `w^H Xi w / w^H Lambda w`.
///
/// Whitens with `Lambda^{-1/2}`, takes the top eigenvector `u` of
/// `Lambda^{-1/2} Xi Lambda^{-1/2}` and maps back `w ∝ Lambda^{-1/2} u`.
pub fn generalized_rayleigh_max(xi: &CMat, lambda: &CMat) -> Result<CVec> {
    let n = lambda.nrows();
    let (lv, lu) = herm_eig(lambda);
    let trace: f64 = lv.iter().sum();
    if n == 0 || !(lv[0] > 1e-12 * trace.abs()) || !(trace > 0.0) {
        return Err(Error::SingularDenominator);
    }
    let mut inv_sqrt = lu.clone();
    for (k, mut col) in inv_sqrt.column_iter_mut().enumerate() {
        col *= c(1.0 / lv[k].sqrt());
    }
    let inv_sqrt = &inv_sqrt * lu.adjoint();
    let whitened = &inv_sqrt * xi * &inv_sqrt;
    let (_, wu) = herm_eig(&whitened);
    let w = &inv_sqrt * wu.column(n - 1);
    let norm = w.norm();
    if !(norm > 0.0) {
        return Err(Error::SingularDenominator);
    }
    Ok(canonical_phase(&(w / c(norm))))
}
