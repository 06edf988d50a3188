//! Orthogonal-factorization least squares: a streaming triangular accumulator
//! and a column-pivoted Householder QR solver with minimum-norm fallback.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Running triangular factor `R` of the row-stacked matrix `[F | Y]`.
///
/// After any sequence of [`push`](Self::push) calls, `RᵀR = [F | Y]ᵀ[F | Y]`
/// for all rows pushed so far, without ever forming that product.
#[derive(Clone, Debug)]
pub struct LeastSquaresAccumulator<T: Scalar> {
    features: usize,
    targets: usize,
    r: DMatrix<T>,
    rows: usize,
}

impl<T: Scalar> LeastSquaresAccumulator<T> {
    pub fn new(features: usize, targets: usize) -> Self {
        Self { features, targets, r: DMatrix::zeros(0, features + targets), rows: 0 }
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn targets(&self) -> usize {
        self.targets
    }

    /// Number of data rows absorbed so far.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Absorbs a block of rows.
    pub fn push(&mut self, features: &DMatrix<T>, targets: &DMatrix<T>) -> Result<()> {
        if features.ncols() != self.features || targets.ncols() != self.targets || features.nrows() != targets.nrows() {
            return Err(Error::shape(
                "regression block",
                format!("rows x {} features and rows x {} targets", self.features, self.targets),
                format!("{:?} and {:?}", features.shape(), targets.shape()),
            ));
        }
        let width = self.features + self.targets;
        let mut stacked = DMatrix::zeros(self.r.nrows() + features.nrows(), width);
        stacked.view_mut((0, 0), self.r.shape()).copy_from(&self.r);
        let top = self.r.nrows();
        stacked.view_mut((top, 0), features.shape()).copy_from(features);
        stacked.view_mut((top, self.features), targets.shape()).copy_from(targets);
        self.r = stacked.qr().r();
        self.rows += features.nrows();
        Ok(())
    }

    /// Triangular factor padded to `(n + p) × (n + p)`.
    pub fn factor(&self) -> DMatrix<T> {
        let width = self.features + self.targets;
        let mut full = DMatrix::zeros(width, width);
        let k = self.r.nrows().min(width);
        full.view_mut((0, 0), (k, width)).copy_from(&self.r.rows(0, k));
        full
    }

    /// Solves `min ‖F cᵀ − Y‖² + λ ‖c‖²` for the rows absorbed so far.
    pub fn solve(&self, ridge_lambda: T, rcond: T) -> Result<LeastSquaresFit<T>> {
        if self.rows == 0 {
            return Err(Error::InvalidArgument("least squares needs at least one row".into()));
        }
        if ridge_lambda < T::zero() {
            return Err(Error::InvalidArgument(format!("ridge parameter must be >= 0, got {ridge_lambda}")));
        }
        let n = self.features;
        let r = self.factor();
        let r_ff = r.view((0, 0), (n, n)).into_owned();
        let z = r.view((0, n), (n, self.targets)).into_owned();
        let r_yy = r.view((n, n), (self.targets, self.targets)).into_owned();

        let (a, b) = if ridge_lambda > T::zero() {
            let mut a = DMatrix::zeros(2 * n, n);
            a.view_mut((0, 0), (n, n)).copy_from(&r_ff);
            let s = ridge_lambda.sqrt();
            for i in 0..n {
                a[(n + i, i)] = s;
            }
            let mut b = DMatrix::zeros(2 * n, self.targets);
            b.view_mut((0, 0), z.shape()).copy_from(&z);
            (a, b)
        } else {
            (r_ff.clone(), z.clone())
        };
        let solution = pivoted_qr_solve(&a, &b, rcond)?;
        let fitted = &r_ff * &solution.x - &z;
        let residual = fitted.norm_squared() + r_yy.norm_squared();
        Ok(LeastSquaresFit { coefficients: solution.x.transpose(), residual, rank: solution.rank, features: n })
    }
}

/// Result of a least-squares fit; `coefficients` is `p × n`.
#[derive(Clone, Debug)]
pub struct LeastSquaresFit<T: Scalar> {
    pub coefficients: DMatrix<T>,
    /// Training residual `‖F Cᵀ − Y‖²_F` (without the ridge penalty).
    pub residual: T,
    /// Numerical rank of the (regularized) system.
    pub rank: usize,
    pub features: usize,
}

impl<T: Scalar> LeastSquaresFit<T> {
    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.features
    }
}

/// Solution of a pivoted-QR solve.
#[derive(Clone, Debug)]
pub struct PivotedSolution<T: Scalar> {
    pub x: DMatrix<T>,
    pub rank: usize,
    pub permutation: Vec<usize>,
}

/// Minimum-norm least-squares solution of `A X ≈ B` by Householder QR with
/// column pivoting. Columns whose pivot falls below `rcond · |R_00|` are
/// treated as dependent; the remaining system is solved through a complete
/// orthogonal decomposition so the returned `X` has minimum norm.
pub fn pivoted_qr_solve<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, rcond: T) -> Result<PivotedSolution<T>> {
    let (m, n) = a.shape();
    if b.nrows() != m {
        return Err(Error::shape("right-hand side rows", m, b.nrows()));
    }
    let mut r = a.clone();
    let mut qtb = b.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    let mut norms: Vec<T> = (0..n).map(|j| r.column(j).norm_squared()).collect();
    let mut v = vec![T::zero(); m];

    for k in 0..steps {
        // Pivot: remaining column of largest norm (recomputed to avoid downdate drift).
        for j in k..n {
            norms[j] = r.view((k, j), (m - k, 1)).norm_squared();
        }
        let p = (k..n).fold(k, |best, j| if norms[j] > norms[best] { j } else { best });
        if p != k {
            r.swap_columns(k, p);
            perm.swap(k, p);
            norms.swap(k, p);
        }
        let alpha = norms[k].sqrt();
        if alpha == T::zero() {
            break;
        }
        let x0 = r[(k, k)];
        let beta = if x0 >= T::zero() { -alpha } else { alpha };
        // v = x − beta e_1, reflector H = I − 2 v vᵀ / vᵀv.
        v[k] = x0 - beta;
        for i in k + 1..m {
            v[i] = r[(i, k)];
        }
        let vtv = v[k] * v[k] + (k + 1..m).fold(T::zero(), |acc, i| acc + v[i] * v[i]);
        if vtv == T::zero() {
            continue;
        }
        let tau = lit::<T>(2.0) / vtv;
        for j in k..n {
            let dot = (k..m).fold(T::zero(), |acc, i| acc + v[i] * r[(i, j)]);
            let s = tau * dot;
            for i in k..m {
                r[(i, j)] -= s * v[i];
            }
        }
        for j in 0..qtb.ncols() {
            let dot = (k..m).fold(T::zero(), |acc, i| acc + v[i] * qtb[(i, j)]);
            let s = tau * dot;
            for i in k..m {
                qtb[(i, j)] -= s * v[i];
            }
        }
        r[(k, k)] = beta;
        for i in k + 1..m {
            r[(i, k)] = T::zero();
        }
    }

    let top = if steps > 0 { r[(0, 0)].abs() } else { T::zero() };
    let cut = rcond * top;
    let rank = (0..steps).take_while(|&k| r[(k, k)].abs() > cut && top > T::zero()).count();
    let mut y = DMatrix::zeros(n, b.ncols());
    if rank > 0 {
        let c1 = qtb.rows(0, rank).into_owned();
        if rank == n {
            let r11 = r.view((0, 0), (n, n)).upper_triangle();
            y = r11
                .solve_upper_triangular(&c1)
                .ok_or_else(|| Error::Invariant("singular triangular factor".into()))?;
        } else {
            // [R11 R12] = Rtᵀ Zᵀ from the QR of its transpose.
            let top_rows = r.view((0, 0), (rank, n)).upper_triangle();
            let qr = top_rows.transpose().qr();
            let z = qr.q();
            let rt = qr.r();
            let w = rt
                .transpose()
                .solve_lower_triangular(&c1)
                .ok_or_else(|| Error::Invariant("singular triangular factor".into()))?;
            y = z * w;
        }
    }
    let mut x = DMatrix::zeros(n, b.ncols());
    for (k, &col) in perm.iter().enumerate() {
        x.set_row(col, &y.row(k));
    }
    Ok(PivotedSolution { x, rank, permutation: perm })
}

/// Default relative pivot threshold for a problem with `n` unknowns.
pub fn default_rcond<T: Scalar>(n: usize) -> T {
    <T as Scalar>::epsilon() * from_usize::<T>(n.max(1)) * lit(10.0)
}
