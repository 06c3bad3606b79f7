use crate::error::{Error, Result};
use crate::linalg::{herm_eig, CMat, CVec};

/// Principal component `sqrt(l1) u1` of a PSD matrix and the ratio `l2 / l1`.
pub fn rank1_extract(f: &CMat) -> Result<(CVec, f64)> {
    let n = f.nrows();
    if n == 0 || f.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let (vals, vecs) = herm_eig(f);
    let l1 = vals[n - 1];
    if !(l1 > 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let ratio = if n > 1 { vals[n - 2].max(0.0) / l1 } else { 0.0 };
    Ok((vecs.column(n - 1).into_owned() * crate::linalg::c(l1.sqrt()), ratio))
}
