use nalgebra::{DMatrix, DVector};

use super::NonlinearSystem;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Finite-difference semi-discretization of
/// `v_t = v_ζζ + v − v³ + e^ζ u_1 + v² u_2` on `ζ ∈ (0, 1)` with homogeneous
/// Dirichlet boundary values, `v(0, ·) = 0.5 sin(ζ)` and output `exp(mean v)`.
#[derive(Clone, Debug)]
pub struct ReactionDiffusion<T: Scalar> {
    d: usize,
    inv_h2: T,
    exp_zeta: Vec<T>,
    x0: DVector<T>,
}

impl<T: Scalar> ReactionDiffusion<T> {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!("reaction-diffusion needs d >= 2 interior points, got {d}")));
        }
        let h = T::one() / from_usize::<T>(d + 1);
        let zeta: Vec<T> = (1..=d).map(|j| from_usize::<T>(j) * h).collect();
        Ok(Self {
            d,
            inv_h2: T::one() / (h * h),
            exp_zeta: zeta.iter().map(|z| z.exp()).collect(),
            x0: DVector::from_iterator(d, zeta.iter().map(|z| lit::<T>(0.5) * z.sin())),
        })
    }

    /// Mesh width `1 / (d + 1)`.
    pub fn mesh_width(&self) -> T {
        T::one() / from_usize::<T>(self.d + 1)
    }

    /// The tridiagonal Laplacian `(1/h²) tridiag(1, −2, 1)`.
    pub fn laplacian(&self) -> DMatrix<T> {
        let d = self.d;
        DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                -lit::<T>(2.0) * self.inv_h2
            } else if i.abs_diff(j) == 1 {
                self.inv_h2
            } else {
                T::zero()
            }
        })
    }

    /// `out = 𝒜 x`.
    pub fn apply_laplacian(&self, x: &[T], out: &mut [T]) {
        let d = self.d;
        let two: T = lit(2.0);
        out[0] = self.inv_h2 * (x[1] - two * x[0]);
        for j in 1..d - 1 {
            out[j] = self.inv_h2 * (x[j - 1] - two * x[j] + x[j + 1]);
        }
        out[d - 1] = self.inv_h2 * (x[d - 2] - two * x[d - 1]);
    }

    /// `out = x − x³ + e^ζ u_1 + x² u_2`: everything except the Laplacian.
    pub fn reaction(&self, x: &[T], u: &[T], out: &mut [T]) {
        let (u1, u2) = (u[0], u[1]);
        for j in 0..self.d {
            let v = x[j];
            out[j] = v - v * v * v + self.exp_zeta[j] * u1 + v * v * u2;
        }
    }
}

impl<T: Scalar> NonlinearSystem<T> for ReactionDiffusion<T> {
    fn state_dim(&self) -> usize {
        self.d
    }

    fn inputs(&self) -> usize {
        2
    }

    fn outputs(&self) -> usize {
        1
    }

    fn initial_state(&self) -> DVector<T> {
        self.x0.clone()
    }

    fn drift(&self, x: &[T], out: &mut [T]) {
        self.apply_laplacian(x, out);
        for (o, &v) in out.iter_mut().zip(x) {
            *o += v - v * v * v;
        }
    }

    fn add_input_field(&self, i: usize, x: &[T], scale: T, out: &mut [T]) {
        match i {
            0 => {
                for (o, &e) in out.iter_mut().zip(&self.exp_zeta) {
                    *o += scale * e;
                }
            }
            1 => {
                for (o, &v) in out.iter_mut().zip(x) {
                    *o += scale * v * v;
                }
            }
            _ => panic!("reaction-diffusion has two inputs, got channel {i}"),
        }
    }

    fn output(&self, x: &[T], y: &mut [T]) {
        let mean = x.iter().fold(T::zero(), |a, &v| a + v) / from_usize::<T>(self.d);
        y[0] = mean.exp();
    }

    fn stiffness(&self) -> T {
        lit::<T>(4.0) * self.inv_h2 + lit(4.0)
    }

    fn rhs(&self, x: &[T], u: &[T], out: &mut [T]) {
        let d = self.d;
        let two: T = lit(2.0);
        let (u1, u2) = (u[0], u[1]);
        for j in 0..d {
            let left = if j > 0 { x[j - 1] } else { T::zero() };
            let right = if j + 1 < d { x[j + 1] } else { T::zero() };
            let v = x[j];
            out[j] = self.inv_h2 * (left - two * v + right) + v - v * v * v + self.exp_zeta[j] * u1 + v * v * u2;
        }
    }
}
