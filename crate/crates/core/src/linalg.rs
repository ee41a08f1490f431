//! Small dense linear-algebra helpers shared by the model modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid_input, Result};

/// Eigendecomposition of the symmetric part of `m`.
pub fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
}

/// Rebuilds `V diag(values) Vᵀ`.
pub fn compose(vectors: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
    let scaled = vectors * DMatrix::from_diagonal(values);
    let out = &scaled * vectors.transpose();
    (&out + out.transpose()) * 0.5
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Symmetric square root of a positive-definite matrix.
pub fn sqrt_pd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !is_symmetric(m, 1e-9 * m.amax().max(1.0)) {
        return Err(invalid_input("covariance matrix is not symmetric"));
    }
    let eig = sym_eigen(m);
    if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
        return Err(invalid_input("covariance matrix is not positive definite"));
    }
    Ok(compose(&eig.eigenvectors, &eig.eigenvalues.map(f64::sqrt)))
}

/// Row-major flattening of a matrix.
pub fn flatten_row_major(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.transpose().iter().copied())
}

pub fn unflatten_row_major(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, v.as_slice())
}

/// `I^{m×n}`: the min(m, n) identity padded with zeros.
pub fn padded_identity(rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::identity(rows, cols)
}

/// Quadratic form `vᵀ A v`.
pub fn quad_form(a: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(a * v))
}

pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    max + values.into_iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
