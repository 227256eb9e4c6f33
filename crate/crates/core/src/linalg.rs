//! Small dense symmetric-matrix helpers on top of nalgebra.

#[allow(unused_imports)]
use crate::float::F64Ext;
use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative eigenvalue floor used by the symmetric matrix functions.
pub const EIGEN_FLOOR: f64 = 1e-14;

pub fn frobenius(m: &Mat) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

fn require_square(m: &Mat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    Ok(())
}

/// Symmetric to machine tolerance with strictly positive spectrum.
pub fn check_spd(m: &Mat, name: &str) -> Result<()> {
    require_square(m)?;
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if !m.iter().all(|x| x.is_finite()) || asym > 1e-12 * scale {
        return Err(Error::NotPositiveDefinite { name: name.to_string() });
    }
    let (vals, _) = sym_eigen(m);
    if vals.iter().any(|&l| l <= 0.0) || m.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite { name: name.to_string() });
    }
    Ok(())
}

/// Symmetric eigendecomposition with eigenvalues ascending and each
/// eigenvector's largest-magnitude entry made positive.
pub fn sym_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.nrows();
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).clone_owned();
        let pivot = col.iamax();
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vecs.set_column(k, &col);
    }
    (vals, vecs)
}

/// `U f(Λ) Uᵀ` for symmetric `m`, with eigenvalues floored at `EIGEN_FLOOR · trace`.
pub fn sym_apply(m: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let (vals, vecs) = sym_eigen(m);
    let floor = EIGEN_FLOOR * m.trace().abs();
    let d = Vector::from_iterator(vals.len(), vals.iter().map(|&l| f(l.max(floor))));
    &vecs * Mat::from_diagonal(&d) * vecs.transpose()
}

pub fn sym_sqrt(m: &Mat) -> Mat {
    sym_apply(m, libm::sqrt)
}

pub fn sym_inv_sqrt(m: &Mat) -> Mat {
    sym_apply(m, |l| 1.0 / libm::sqrt(l))
}

/// Spectral condition number of a symmetric matrix; infinite when not positive definite.
pub fn sym_cond(m: &Mat) -> f64 {
    let (vals, _) = sym_eigen(m);
    let lo = vals.first().copied().unwrap_or(0.0);
    let hi = vals.last().copied().unwrap_or(0.0);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn spd_inverse(m: &Mat, name: &str) -> Result<Mat> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::NotPositiveDefinite { name: name.to_string() })
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::invalid("ragged matrix rows"));
    }
    Ok(Mat::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let m = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = sym_sqrt(&m);
        assert!(frobenius(&(&s * &s - &m)) < 1e-13);
        let is = sym_inv_sqrt(&m);
        assert!(frobenius(&(&is * &m * &is - Mat::identity(2, 2))) < 1e-13);
    }

    #[test]
    fn spd_check_rejects_indefinite_and_asymmetric() {
        let bad = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(check_spd(&bad, "S"), Err(Error::NotPositiveDefinite { .. })));
        let asym = Mat::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(check_spd(&asym, "S").is_err());
        assert!(check_spd(&Mat::identity(3, 3), "I").is_ok());
    }

    #[test]
    fn eigen_is_sorted() {
        let m = Mat::from_diagonal(&Vector::from_vec(alloc::vec![3.0, 1.0, 2.0]));
        let (vals, _) = sym_eigen(&m);
        assert_eq!(vals, alloc::vec![1.0, 2.0, 3.0]);
    }
}
