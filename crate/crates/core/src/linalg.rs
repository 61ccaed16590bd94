//! Small dense matrix helpers on top of nalgebra.

use nalgebra::DMatrix;
use thiserror::Error;

/// Smallest singular value still treated as invertible.
pub const SINGULAR_FLOOR: f64 = 1e-12;
/// Largest condition number accepted by [`checked_inverse`].
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is singular (smallest singular value {0:e})")]
    Singular(f64),
    #[error("matrix is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
}

/// Singular values; a single NaN when an entry is not finite.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    if m.iter().any(|v| !v.is_finite()) {
        return vec![f64::NAN];
    }
    m.singular_values().iter().copied().collect()
}

/// Spectral norm. Zero for matrices with an empty dimension, NaN when an
/// entry is not finite.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).into_iter().fold(0.0, |a, s| if s.is_nan() || a.is_nan() { f64::NAN } else { a.max(s) })
}

/// Smallest singular value; `+inf` for the 0x0 matrix.
pub fn min_singular(m: &DMatrix<f64>) -> f64 {
    singular_values(m)
        .into_iter()
        .fold(f64::INFINITY, |a, s| if s.is_nan() || a.is_nan() { f64::NAN } else { a.min(s) })
}

/// Inverse through an LU solve, refused when the matrix is numerically
/// singular or its condition number exceeds [`MAX_CONDITION`].
pub fn checked_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
    }
    if m.is_empty() {
        return Ok(m.clone());
    }
    let smax = op_norm(m);
    let smin = min_singular(m);
    if !(smin > SINGULAR_FLOOR) {
        return Err(LinalgError::Singular(smin));
    }
    let cond = smax / smin;
    if cond > MAX_CONDITION {
        return Err(LinalgError::IllConditioned(cond));
    }
    m.clone().lu().try_inverse().ok_or(LinalgError::Singular(smin))
}

/// `(M^{1/2}, M^{-1/2})` of a symmetric positive-definite matrix.
pub fn spd_sqrt_pair(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let q = &eig.eigenvectors;
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let inv_root = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    (q * root * q.transpose(), q * inv_root * q.transpose())
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_of_simple_matrices() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -4.0]);
        assert!((op_norm(&m) - 4.0).abs() < 1e-14);
        assert!((min_singular(&m) - 3.0).abs() < 1e-14);
        assert_eq!(op_norm(&DMatrix::zeros(0, 0)), 0.0);
        assert_eq!(op_norm(&DMatrix::zeros(2, 0)), 0.0);
        assert!(op_norm(&DMatrix::from_element(1, 1, f64::INFINITY)).is_nan());
        assert!(min_singular(&DMatrix::from_element(1, 1, f64::NAN)).is_nan());
        assert!(matches!(checked_inverse(&DMatrix::from_element(1, 1, f64::NAN)), Err(LinalgError::Singular(_))));
    }

    #[test]
    fn inverse_checks() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let inv = checked_inverse(&m).unwrap();
        assert!(max_abs_diff(&(m * inv), &DMatrix::identity(2, 2)) < 1e-15);
        let z = DMatrix::<f64>::zeros(2, 2);
        assert!(matches!(checked_inverse(&z), Err(LinalgError::Singular(_))));
        let bad = DMatrix::from_row_slice(2, 2, &[10.0, 0.0, 0.0, 5e-12]);
        assert!(matches!(checked_inverse(&bad), Err(LinalgError::IllConditioned(_))));
        assert!(matches!(checked_inverse(&DMatrix::zeros(1, 2)), Err(LinalgError::NotSquare(1, 2))));
    }

    #[test]
    fn spd_roots() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let (r, ir) = spd_sqrt_pair(&m);
        assert!(max_abs_diff(&(&r * &r), &m) < 1e-13);
        assert!(max_abs_diff(&(&r * &ir), &DMatrix::identity(2, 2)) < 1e-13);
    }
}
