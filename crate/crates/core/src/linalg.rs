//! Small dense helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// `max |X - Xᵀ| / max(|X|, tiny)`.
pub fn relative_asymmetry<T: Scalar>(x: &DMatrix<T>) -> T {
    let scale = x.amax();
    if scale == T::zero() {
        return T::zero();
    }
    (x - x.transpose()).amax() / scale
}

/// `(X + Xᵀ) / 2` in place.
pub fn symmetrize<T: Scalar>(x: &mut DMatrix<T>) {
    let n = x.nrows();
    let half: T = lit(0.5);
    for j in 0..n {
        for i in 0..j {
            let v = (x[(i, j)] + x[(j, i)]) * half;
            x[(i, j)] = v;
            x[(j, i)] = v;
        }
    }
}

/// Eigen-decomposition of a symmetric matrix with ascending eigenvalues and
/// orthonormal eigenvectors in the matching columns. Ties keep solver order.
pub fn symmetric_eigen<T: Scalar>(x: &DMatrix<T>) -> Result<(DVector<T>, DMatrix<T>)> {
    sorted_eigen(x, false)
}

/// [`symmetric_eigen`] with descending eigenvalues.
pub fn symmetric_eigen_descending<T: Scalar>(x: &DMatrix<T>) -> Result<(DVector<T>, DMatrix<T>)> {
    sorted_eigen(x, true)
}

fn sorted_eigen<T: Scalar>(x: &DMatrix<T>, descending: bool) -> Result<(DVector<T>, DMatrix<T>)> {
    if !x.is_square() {
        return Err(Error::shape("symmetric eigenproblem", "square matrix", format!("{}x{}", x.nrows(), x.ncols())));
    }
    let asym = relative_asymmetry(x);
    if asym > lit(1e-8) {
        return Err(Error::NotSymmetric(to_f64(asym)));
    }
    let mut sym = x.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        let ord = eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal);
        if descending {
            ord.reverse()
        } else {
            ord
        }
    });
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(x.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Frobenius inner product `⟨X, Y⟩ = tr(XᵀY)`.
pub fn frobenius_dot<T: Scalar>(x: &DMatrix<T>, y: &DMatrix<T>) -> T {
    x.iter().zip(y.iter()).fold(T::zero(), |a, (&p, &q)| a + p * q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_ascending_and_orthonormal() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0_f64]);
        let (vals, vecs) = symmetric_eigen(&m).unwrap();
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
        let recon = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((recon - &m).amax() < 1e-12);
        assert!((vecs.transpose() * &vecs - DMatrix::identity(3, 3)).amax() < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(symmetric_eigen(&bad), Err(Error::NotSymmetric(_))));
    }
}
