//! Complex Hermitian to real symmetric reduction.
//!
//! `H = A + iB` maps to `[[A, -B], [B, A]]`. The map preserves the spectrum
//! (every eigenvalue appears twice) and `Re tr(H X) = <emb H, emb X> / 2`.

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_defect, CMat, RMat};

/// Largest Hermitian defect accepted by [`embed_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn embed_hermitian(h: &CMat) -> Result<RMat> {
    if !h.is_square() {
        return Err(Error::Validation(format!(
            "matrix is {}x{}, not square",
            h.nrows(),
            h.ncols()
        )));
    }
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = hermitian_defect(h);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(embed_unchecked(h))
}

pub(crate) fn embed_unchecked(h: &CMat) -> RMat {
    let n = h.nrows();
    RMat::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of the embedding on structured matrices; on arbitrary symmetric
/// input it returns the Hermitian matrix whose embedding is closest.
pub fn unembed(y: &RMat) -> CMat {
    let n = y.nrows() / 2;
    CMat::from_fn(n, n, |i, j| {
        let re = 0.5 * (y[(i, j)] + y[(i + n, j + n)]);
        let im = 0.5 * (y[(i + n, j)] - y[(i, j + n)]);
        c(re, im)
    })
}
