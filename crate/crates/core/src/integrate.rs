//! Fixed-step classical Runge–Kutta integration and grid quadrature.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// States whose Euclidean norm exceeds this bound are treated as divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Classical fourth-order Runge–Kutta stepper with reusable stage buffers.
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    stage: Vec<T>,
}

impl<T: Scalar> Rk4<T> {
    pub fn new(dim: usize) -> Self {
        let z = vec![T::zero(); dim];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), stage: z }
    }

    /// Advances `x` from `t` to `t + h` for `x' = f(t, x)`.
    pub fn step<F>(&mut self, f: &mut F, t: T, h: T, x: &mut [T])
    where
        F: FnMut(T, &[T], &mut [T]),
    {
        let half = h * lit(0.5);
        f(t, x, &mut self.k1);
        for ((s, &xi), &k) in self.stage.iter_mut().zip(x.iter()).zip(&self.k1) {
            *s = xi + half * k;
        }
        f(t + half, &self.stage, &mut self.k2);
        for ((s, &xi), &k) in self.stage.iter_mut().zip(x.iter()).zip(&self.k2) {
            *s = xi + half * k;
        }
        f(t + half, &self.stage, &mut self.k3);
        for ((s, &xi), &k) in self.stage.iter_mut().zip(x.iter()).zip(&self.k3) {
            *s = xi + h * k;
        }
        f(t + h, &self.stage, &mut self.k4);
        let sixth = h / lit(6.0);
        for i in 0..x.len() {
            x[i] += sixth * (self.k1[i] + lit::<T>(2.0) * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

/// Fails with [`Error::Divergence`] when `x` holds a non-finite value or its norm
/// exceeds [`DIVERGENCE_BOUND`].
pub fn guard<T: Scalar>(x: &[T], step: usize, t: T) -> Result<()> {
    let mut sq = T::zero();
    for &v in x {
        if !v.is_finite() {
            return Err(Error::Divergence { step, time: to_f64(t) });
        }
        sq += v * v;
    }
    if sq.sqrt() > lit(DIVERGENCE_BOUND) {
        return Err(Error::Divergence { step, time: to_f64(t) });
    }
    Ok(())
}

/// Integrates `x' = f(cell, t, x)` across `grid`, taking `substeps` RK4 steps per
/// grid interval. `cell` is the index of the interval containing the step, so
/// piecewise-defined right-hand sides never see the neighbouring cell at the
/// interval end. `record(j, x)` is called at every grid point, starting at `j = 0`.
pub fn integrate_on_grid<T, F, R>(
    grid: &TimeGrid<T>,
    x: &mut [T],
    substeps: usize,
    mut f: F,
    mut record: R,
) -> Result<()>
where
    T: Scalar,
    F: FnMut(usize, T, &[T], &mut [T]),
    R: FnMut(usize, &[T]),
{
    let substeps = substeps.max(1);
    let h = grid.step() / from_usize::<T>(substeps);
    let mut rk = Rk4::new(x.len());
    guard(x, 0, grid.start())?;
    record(0, x);
    for j in 0..grid.len() - 1 {
        let t0 = grid.time(j);
        let mut in_cell = |t: T, x: &[T], dx: &mut [T]| f(j, t, x, dx);
        for s in 0..substeps {
            rk.step(&mut in_cell, t0 + h * from_usize::<T>(s), h, x);
        }
        guard(x, j + 1, grid.time(j + 1))?;
        record(j + 1, x);
    }
    Ok(())
}

/// Composite trapezoid rule for samples on a uniform grid with spacing `h`.
pub fn trapezoid<T: Scalar>(values: &[T], h: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let inner: T = values[1..n - 1].iter().fold(T::zero(), |a, &v| a + v);
            h * (inner + (values[0] + values[n - 1]) * lit(0.5))
        }
    }
}

/// Composite Simpson rule; falls back to Simpson plus one trapezoid panel when
/// the number of intervals is odd.
pub fn simpson<T: Scalar>(values: &[T], h: T) -> T {
    let n = values.len();
    if n < 3 {
        return trapezoid(values, h);
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut acc = values[0] + values[even];
    for (i, &v) in values.iter().enumerate().take(even).skip(1) {
        acc += v * if i % 2 == 1 { lit(4.0) } else { lit(2.0) };
    }
    let mut total = acc * h / lit(3.0);
    if even < intervals {
        total += (values[even] + values[even + 1]) * h * lit(0.5);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_exact_for_cubic_polynomial_rhs() {
        // x' = 3 t^2 integrates exactly to t^3.
        let grid = TimeGrid::horizon(1.0_f64, 11).unwrap();
        let mut x = [0.0];
        let mut last = 0.0;
        integrate_on_grid(&grid, &mut x, 1, |_, t, _x, dx| dx[0] = 3.0 * t * t, |_, x| last = x[0]).unwrap();
        assert!((last - 1.0).abs() < 1e-14);
    }

    #[test]
    fn guard_flags_blow_up() {
        let grid = TimeGrid::horizon(1.0_f64, 101).unwrap();
        let mut x = [1.0];
        let err = integrate_on_grid(&grid, &mut x, 1, |_, _t, x, dx| dx[0] = 60.0 * x[0], |_, _| {}).unwrap_err();
        match err {
            Error::Divergence { step, .. } => assert!(step > 1 && step < 101),
            e => panic!("unexpected {e}"),
        }
        assert!(guard(&[f64::NAN], 3, 0.0).is_err());
    }

    #[test]
    fn quadrature_rules() {
        let h = 0.01;
        let v: Vec<f64> = (0..101).map(|j| (j as f64 * h).powi(2)).collect();
        assert!((trapezoid(&v, h) - 1.0 / 3.0).abs() < 1e-4);
        assert!((simpson(&v, h) - 1.0 / 3.0).abs() < 1e-14);
        let odd: Vec<f64> = (0..4).map(|j| j as f64).collect();
        assert!((simpson(&odd, 1.0) - 4.5).abs() < 1e-14);
    }
}
