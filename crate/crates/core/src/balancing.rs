//! Balancing transformation and balanced truncation.

use nalgebra::{DMatrix, DVector};

use crate::bilinear::BilinearSystem;
use crate::error::{Error, Result};
use crate::linalg::{relative_asymmetry, symmetric_eigen, symmetric_eigen_descending};
use crate::scalar::{lit, to_f64, Scalar};

/// Eigenvalues of `P` below this fraction of the largest are treated as zero.
pub const GRAMIAN_CLIP: f64 = 1e-12;

/// Hankel values below this fraction of `σ_1` are excluded from the balanced coordinates.
pub const HANKEL_CLIP: f64 = 1e-7;

/// Inputs whose relative asymmetry exceeds this are rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Balancing transform restricted to the numerically definite subspace.
///
/// `t_mat` is `k×n` and `t_inv` is `n×k`, with `t_mat · t_inv = I_k`, where `k`
/// is the number of retained Hankel values.
#[derive(Clone, Debug)]
pub struct Balancing<T: Scalar> {
    pub t_mat: DMatrix<T>,
    pub t_inv: DMatrix<T>,
    /// All Hankel values, descending, padded with zeros to length `n`.
    pub sigma: DVector<T>,
    /// Number of eigenvalues of `P` kept by the square-root factor.
    pub reachable_rank: usize,
}

impl<T: Scalar> Balancing<T> {
    /// Number of balanced coordinates available for truncation.
    pub fn rank(&self) -> usize {
        self.t_mat.nrows()
    }

    /// Leading `k` Hankel values, the ones present in the balanced coordinates.
    pub fn retained_sigma(&self) -> DVector<T> {
        self.sigma.rows(0, self.rank()).into_owned()
    }
}

/// Square-root balancing: `P ≈ L_P L_Pᵀ`, `L_Pᵀ Q L_P = V Σ² Vᵀ`,
/// `𝒯 = Σ^{1/2} Vᵀ L_P⁺` and `𝒯⁻¹ = L_P V Σ^{-1/2}`.
pub fn balance<T: Scalar>(p: &DMatrix<T>, q: &DMatrix<T>) -> Result<Balancing<T>> {
    let n = p.nrows();
    if !p.is_square() || q.shape() != p.shape() {
        return Err(Error::shape("Gramians", format!("two {n}x{n} matrices"), format!("{:?} and {:?}", p.shape(), q.shape())));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty Gramians".into()));
    }
    for m in [p, q] {
        let asym = relative_asymmetry(m);
        if asym > lit(SYMMETRY_TOLERANCE) {
            return Err(Error::NotSymmetric(to_f64(asym)));
        }
    }

    let (lambda, w) = symmetric_eigen_descending(p)?;
    let lambda_max = lambda[0];
    if !(lambda_max > T::zero()) {
        return Err(Error::RankDeficient { effective: 0, requested: 1 });
    }
    let cut = lambda_max * lit(GRAMIAN_CLIP);
    let kp = lambda.iter().take_while(|&&l| l > cut).count();
    let sqrt_lambda = DVector::from_iterator(kp, lambda.iter().take(kp).map(|l| l.sqrt()));
    let w_k = w.columns(0, kp).into_owned();
    let l_p = &w_k * DMatrix::from_diagonal(&sqrt_lambda);
    let l_p_pinv = DMatrix::from_diagonal(&sqrt_lambda.map(|s| T::one() / s)) * w_k.transpose();

    let mut m = l_p.tr_mul(q) * &l_p;
    crate::linalg::symmetrize(&mut m);
    let (sigma_sq, v) = symmetric_eigen_descending(&m)?;
    let mut sigma = DVector::zeros(n);
    for (s, &e) in sigma.iter_mut().zip(sigma_sq.iter()) {
        *s = e.max(T::zero()).sqrt();
    }
    let sigma_max = sigma[0];
    let k = if sigma_max > T::zero() {
        let cut = sigma_max * lit(HANKEL_CLIP);
        sigma.iter().take(kp).take_while(|&&s| s > cut).count()
    } else {
        0
    };
    if k == 0 {
        return Err(Error::RankDeficient { effective: 0, requested: 1 });
    }
    let v_k = v.columns(0, k).into_owned();
    let root = DVector::from_iterator(k, sigma.iter().take(k).map(|s| s.sqrt()));
    let t_mat = DMatrix::from_diagonal(&root) * v_k.transpose() * l_p_pinv;
    let t_inv = &l_p * v_k * DMatrix::from_diagonal(&root.map(|s| T::one() / s));
    Ok(Balancing { t_mat, t_inv, sigma, reachable_rank: kp })
}

/// Balanced truncation to order `r`: leading blocks of `𝒯 A_i 𝒯⁻¹`, `𝒯 S_0`, `C 𝒯⁻¹`.
pub fn reduce<T: Scalar>(sys: &BilinearSystem<T>, bal: &Balancing<T>, r: usize) -> Result<BilinearSystem<T>> {
    if bal.t_inv.nrows() != sys.dim() {
        return Err(Error::shape("balancing transform", sys.dim(), bal.t_inv.nrows()));
    }
    if r == 0 {
        return Err(Error::InvalidArgument("reduced order must be >= 1".into()));
    }
    if r > bal.rank() {
        log::warn!("rank-deficient Gramian: effective rank {} < requested order {r}", bal.rank());
        return Err(Error::RankDeficient { effective: bal.rank(), requested: r });
    }
    let w = bal.t_mat.rows(0, r).into_owned();
    let v = bal.t_inv.columns(0, r).into_owned();
    Ok(sys.project(&w, &v))
}

/// One row of the Hankel value report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HankelRow<T> {
    /// 1-based position.
    pub index: usize,
    pub sigma: T,
    pub relative: T,
}

/// `(i, σ_i, σ_i / σ_1)` for every Hankel value.
pub fn hankel_report<T: Scalar>(sigma: &[T]) -> Result<Vec<HankelRow<T>>> {
    let first = *sigma.first().ok_or_else(|| Error::InvalidArgument("empty Hankel value list".into()))?;
    Ok(sigma
        .iter()
        .enumerate()
        .map(|(i, &s)| HankelRow {
            index: i + 1,
            sigma: s,
            relative: if first > T::zero() { s / first } else { T::zero() },
        })
        .collect())
}

/// Diagnostics of the balancing identities on the retained subspace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalancingResiduals {
    /// `max |𝒯 P 𝒯ᵀ − Σ| / σ_1`.
    pub reachability: f64,
    /// `max |𝒯⁻ᵀ Q 𝒯⁻¹ − Σ| / σ_1`.
    pub observability: f64,
    /// `max |𝒯 𝒯⁻¹ − I|`.
    pub inverse: f64,
}

pub fn balancing_residuals<T: Scalar>(p: &DMatrix<T>, q: &DMatrix<T>, bal: &Balancing<T>) -> BalancingResiduals {
    let k = bal.rank();
    let sigma = DMatrix::from_diagonal(&bal.retained_sigma());
    let scale = to_f64(bal.sigma[0]);
    let pb = &bal.t_mat * p * bal.t_mat.transpose();
    let qb = bal.t_inv.transpose() * q * &bal.t_inv;
    BalancingResiduals {
        reachability: to_f64((pb - &sigma).amax()) / scale,
        observability: to_f64((qb - &sigma).amax()) / scale,
        inverse: to_f64((&bal.t_mat * &bal.t_inv - DMatrix::<T>::identity(k, k)).amax()),
    }
}

/// Eigenvalues of `P Q` from a general (non-symmetric) eigensolver, real parts descending.
pub fn pq_spectrum<T: Scalar>(p: &DMatrix<T>, q: &DMatrix<T>) -> Vec<T> {
    let pq = p * q;
    let mut values: Vec<T> = pq.complex_eigenvalues().iter().map(|z| z.re).collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    values
}

/// Spectrum of `P` or `Q`, ascending.
pub fn gramian_spectrum<T: Scalar>(x: &DMatrix<T>) -> Result<DVector<T>> {
    Ok(symmetric_eigen(x)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gramians() {
        let i = DMatrix::<f64>::identity(4, 4);
        let bal = balance(&i, &i).unwrap();
        assert!(bal.sigma.iter().all(|&s| (s - 1.0).abs() < 1e-14));
        assert!((bal.t_mat.transpose() * &bal.t_mat - &i).amax() < 1e-14);
    }

    #[test]
    fn diagonal_two_by_two() {
        let p = DMatrix::from_row_slice(2, 2, &[4.0_f64, 0.0, 0.0, 1.0]);
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let bal = balance(&p, &q).unwrap();
        assert!((bal.sigma[0] - 2.0).abs() < 1e-14 && (bal.sigma[1] - 2.0).abs() < 1e-14);
        let res = balancing_residuals(&p, &q, &bal);
        assert!(res.reachability < 1e-14 && res.observability < 1e-14 && res.inverse < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(balance(&p, &DMatrix::identity(2, 2)), Err(Error::NotSymmetric(_))));
        assert!(balance(&DMatrix::<f64>::identity(2, 2), &DMatrix::identity(3, 3)).is_err());
        assert!(balance(&DMatrix::<f64>::zeros(2, 2), &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn hankel_rows() {
        let rows = hankel_report(&[1.0, 0.1]).unwrap();
        assert_eq!(rows[0], HankelRow { index: 1, sigma: 1.0, relative: 1.0 });
        assert_eq!(rows[1], HankelRow { index: 2, sigma: 0.1, relative: 0.1 });
        assert!(hankel_report::<f64>(&[]).is_err());
    }
}
