//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `v v^H`.
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Largest absolute entry of `a - a^H`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let d = a - a.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    a.is_square() && hermitian_defect(a) <= tol
}

/// `(a + a^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// `Re tr(a^H b)`, the real inner product on Hermitian matrices.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

pub fn fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order; column `k` of the returned matrix pairs with value `k`.
pub fn eigh_desc(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    let (v, _) = eigh_desc(a);
    v.last().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(a: &CMat) -> f64 {
    let (v, _) = eigh_desc(a);
    v.first().copied().unwrap_or(0.0)
}

/// Real symmetric matrix promoted to complex.
pub fn complexify(a: &RMat) -> CMat {
    a.map(|x| c(x, 0.0))
}
