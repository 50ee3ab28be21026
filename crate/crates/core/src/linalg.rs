//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    a.is_square() && (a - a.transpose()).amax() <= tol
}

/// Eigenvalues of the symmetric part of `a`, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(a)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn lambda_min(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a)[0]
}

pub fn lambda_max(a: &DMatrix<f64>) -> f64 {
    *sym_eigenvalues(a).last().expect("non-empty matrix")
}

/// Closed-form eigenvalues `(min, max)` of `[[p, r], [r, s]]`.
pub fn eig2_sym(p: f64, r: f64, s: f64) -> (f64, f64) {
    let mean = 0.5 * (p + s);
    let rad = (0.5 * (p - s)).hypot(r);
    (mean - rad, mean + rad)
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().svd(false, false).singular_values.max()
}

/// `(sigma_max, sigma_min)` of a square matrix.
pub fn singular_extremes(a: &DMatrix<f64>) -> (f64, f64) {
    let sv = a.clone().svd(false, false).singular_values;
    (sv.max(), sv.min())
}
