//! Dense eigen-solvers shared by the model, root-finding and spectrum code.

use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_ITERATIONS_PER_ROW: usize = 500;

/// All eigenvalues of a general real square matrix.
///
/// The matrix is balanced (Parlett-Reinsch) before the real Schur
/// factorization. Balancing is a diagonal similarity, so the spectrum is
/// unchanged while rows and columns of very different magnitude are evened
/// out.
pub fn eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "eigenvalues of a non-square matrix");
    if n == 0 {
        return Ok(Vec::new());
    }
    let max_abs = matrix.amax();
    if !max_abs.is_finite() {
        return Err(Error::InvalidParameter(
            "matrix contains non-finite entries".into(),
        ));
    }
    let mut balanced = matrix.clone();
    balance_parlett_reinsch(&mut balanced);
    let schur = Schur::try_new(balanced, f64::EPSILON, SCHUR_ITERATIONS_PER_ROW * n)
        .ok_or(Error::EigenNoConvergence { dim: n, max_abs })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(matrix: &DMatrix<f64>) -> Vec<f64> {
    if matrix.nrows() == 0 {
        return Vec::new();
    }
    let mut values: Vec<f64> = SymmetricEigen::new(matrix.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Largest eigenvalue of a symmetric matrix.
pub fn symmetric_max_eigenvalue(matrix: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(matrix)
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// Sorts complex values by real part, then imaginary part.
pub fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
