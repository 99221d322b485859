//! Small vector/matrix helpers for d ≤ 3.

use nalgebra::DMatrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn add_assign(target: &mut [f64], other: &[f64]) {
    for (t, o) in target.iter_mut().zip(other) {
        *t += o;
    }
}

pub fn axpy(target: &mut [f64], alpha: f64, other: &[f64]) {
    for (t, o) in target.iter_mut().zip(other) {
        *t += alpha * o;
    }
}

/// ⟨R y, y⟩ for a symmetric matrix R.
pub fn quadratic_form(r: &DMatrix<f64>, y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            acc += r[(i, j)] * y[i] * y[j];
        }
    }
    acc
}

/// Symmetry and positive semidefiniteness check with the stated tolerances:
/// entrywise symmetry within 1e-12, eigenvalues ≥ -1e-12.
pub fn check_symmetric_psd(r: &DMatrix<f64>) -> Result<(), String> {
    if r.nrows() != r.ncols() {
        return Err(format!("covariance must be square, got {}x{}", r.nrows(), r.ncols()));
    }
    let scale = r.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..r.nrows() {
        for j in (i + 1)..r.ncols() {
            if (r[(i, j)] - r[(j, i)]).abs() > 1e-12 * scale {
                return Err(format!("covariance not symmetric at ({i},{j})"));
            }
        }
    }
    let sym = (r + r.transpose()).scale(0.5);
    let eigs = sym.symmetric_eigenvalues();
    for ev in eigs.iter() {
        if *ev < -1e-12 * scale {
            return Err(format!("covariance has negative eigenvalue {ev}"));
        }
    }
    Ok(())
}

/// Square root factor L of a PSD matrix (R = L Lᵀ) via symmetric
/// eigendecomposition; tolerates rank deficiency, unlike Cholesky.
pub fn psd_sqrt(r: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (r + r.transpose()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        *v = v.max(0.0).sqrt();
    }
    &eig.eigenvectors * DMatrix::from_diagonal(&vals)
}

pub fn is_zero_matrix(r: &DMatrix<f64>) -> bool {
    r.iter().all(|v| *v == 0.0)
}
