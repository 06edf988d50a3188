use nalgebra::{DMatrix, DVector};

use super::NonlinearSystem;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::scalar::{lit, Scalar};

/// Single-input system `x' = 𝒜x − x∘3 + (x∘2) u` observed through `y = x`.
#[derive(Clone, Debug)]
pub struct CubicExample<T: Scalar> {
    a: DMatrix<T>,
    x0: DVector<T>,
}

impl<T: Scalar> CubicExample<T> {
    /// Starts from `x0 = (0.5, …, 0.5)`.
    pub fn new(d: usize, a: DMatrix<T>) -> Result<Self> {
        if d == 0 || a.shape() != (d, d) {
            return Err(Error::shape("drift matrix", format!("{d}x{d}"), format!("{:?}", a.shape())));
        }
        Ok(Self { a, x0: DVector::from_element(d, lit(0.5)) })
    }

    pub fn with_initial_state(mut self, x0: DVector<T>) -> Result<Self> {
        if x0.len() != self.a.nrows() {
            return Err(Error::shape("initial state", self.a.nrows(), x0.len()));
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.a
    }

    /// `L = 2 λ_max((𝒜 + 𝒜ᵀ)/2)`, the one-sided Lipschitz constant of the pair `(f_0, f)`.
    pub fn one_sided_lipschitz_constant(&self) -> Result<T> {
        let sym = (&self.a + self.a.transpose()) * lit::<T>(0.5);
        let (values, _) = symmetric_eigen(&sym)?;
        Ok(lit::<T>(2.0) * values[values.len() - 1])
    }

    /// `(2⟨x−z, f_0(x)−f_0(z)⟩ + ‖f(x)−f(z)‖², L‖x−z‖²)`.
    pub fn one_sided_lipschitz_sides(&self, x: &DVector<T>, z: &DVector<T>) -> Result<(T, T)> {
        let d = self.a.nrows();
        let (mut fx, mut fz) = (vec![T::zero(); d], vec![T::zero(); d]);
        self.drift(x.as_slice(), &mut fx);
        self.drift(z.as_slice(), &mut fz);
        let mut lhs = T::zero();
        let mut dist = T::zero();
        for j in 0..d {
            let diff = x[j] - z[j];
            let g = x[j] * x[j] - z[j] * z[j];
            lhs += lit::<T>(2.0) * diff * (fx[j] - fz[j]) + g * g;
            dist += diff * diff;
        }
        Ok((lhs, self.one_sided_lipschitz_constant()? * dist))
    }
}

impl<T: Scalar> NonlinearSystem<T> for CubicExample<T> {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn inputs(&self) -> usize {
        1
    }

    fn outputs(&self) -> usize {
        self.a.nrows()
    }

    fn initial_state(&self) -> DVector<T> {
        self.x0.clone()
    }

    fn drift(&self, x: &[T], out: &mut [T]) {
        let d = self.a.nrows();
        for i in 0..d {
            let mut acc = T::zero();
            for j in 0..d {
                acc += self.a[(i, j)] * x[j];
            }
            out[i] = acc - x[i] * x[i] * x[i];
        }
    }

    fn add_input_field(&self, i: usize, x: &[T], scale: T, out: &mut [T]) {
        assert_eq!(i, 0, "cubic example has a single input");
        for (o, &v) in out.iter_mut().zip(x) {
            *o += scale * v * v;
        }
    }

    fn output(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x);
    }
}
