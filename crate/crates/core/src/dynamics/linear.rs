use nalgebra::{DMatrix, DVector};

use super::NonlinearSystem;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `x' = 𝒜x + B u`, `y = C x`.
#[derive(Clone, Debug)]
pub struct LinearSystem<T: Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    x0: DVector<T>,
}

impl<T: Scalar> LinearSystem<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, x0: DVector<T>) -> Result<Self> {
        let d = a.nrows();
        if !a.is_square() || b.nrows() != d || c.ncols() != d || x0.len() != d {
            return Err(Error::shape(
                "linear system",
                format!("A {d}x{d}, B {d}xm, C px{d}, x0 {d}"),
                format!("A {:?}, B {:?}, C {:?}, x0 {}", a.shape(), b.shape(), c.shape(), x0.len()),
            ));
        }
        Ok(Self { a, b, c, x0 })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn input_matrix(&self) -> &DMatrix<T> {
        &self.b
    }
}

impl<T: Scalar> NonlinearSystem<T> for LinearSystem<T> {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn inputs(&self) -> usize {
        self.b.ncols()
    }

    fn outputs(&self) -> usize {
        self.c.nrows()
    }

    fn initial_state(&self) -> DVector<T> {
        self.x0.clone()
    }

    fn drift(&self, x: &[T], out: &mut [T]) {
        let d = self.a.nrows();
        for i in 0..d {
            out[i] = (0..d).fold(T::zero(), |acc, j| acc + self.a[(i, j)] * x[j]);
        }
    }

    fn add_input_field(&self, i: usize, _x: &[T], scale: T, out: &mut [T]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o += scale * self.b[(r, i)];
        }
    }

    fn output(&self, x: &[T], y: &mut [T]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = x.iter().enumerate().fold(T::zero(), |acc, (j, &v)| acc + self.c[(r, j)] * v);
        }
    }
}
