//! Sampled control signals `u: [0, T] -> R^m`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scalar::{from_usize, lit, Scalar};

/// How a control was generated; decides how it is evaluated between samples.
#[derive(Clone, Debug, PartialEq)]
pub enum ControlKind {
    /// `(cos kt, sin kt)`, evaluated in closed form.
    TestSinusoid { k: u32 },
    /// Piecewise-constant white-noise realization `c_w dW/dt`, held from the left sample.
    WhiteNoise { seed: u64, path: u64, c_w: f64 },
    /// Arbitrary samples, linearly interpolated.
    Custom,
}

/// A control sampled on a uniform grid; `samples` has one row per grid point.
#[derive(Clone, Debug)]
pub struct ControlSignal<T: Scalar> {
    grid: TimeGrid<T>,
    samples: DMatrix<T>,
    kind: ControlKind,
}

// Three-point Gauss–Legendre nodes on [0, 1] and their weights.
const GAUSS_NODES: [f64; 3] = [0.112_701_665_379_258_31, 0.5, 0.887_298_334_620_741_7];
const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

impl<T: Scalar> ControlSignal<T> {
    pub fn from_samples(grid: TimeGrid<T>, samples: DMatrix<T>) -> Result<Self> {
        if samples.nrows() != grid.len() {
            return Err(Error::shape("control samples", grid.len(), samples.nrows()));
        }
        Ok(Self { grid, samples, kind: ControlKind::Custom })
    }

    /// Samples `f(t, out)` at every grid point.
    pub fn from_fn(grid: TimeGrid<T>, inputs: usize, mut f: impl FnMut(T, &mut [T])) -> Self {
        let mut samples = DMatrix::zeros(grid.len(), inputs);
        let mut row = vec![T::zero(); inputs];
        for (j, t) in grid.times().enumerate() {
            f(t, &mut row);
            for (i, &v) in row.iter().enumerate() {
                samples[(j, i)] = v;
            }
        }
        Self { grid, samples, kind: ControlKind::Custom }
    }

    pub fn zero(grid: TimeGrid<T>, inputs: usize) -> Self {
        Self { grid, samples: DMatrix::zeros(grid.len(), inputs), kind: ControlKind::Custom }
    }

    /// The two-channel test family `u^(k)(t) = (cos kt, sin kt)`.
    pub fn test_sinusoid(k: u32, grid: TimeGrid<T>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("test control frequency k must be >= 1".into()));
        }
        let kf: T = from_usize(k as usize);
        let mut signal = Self::from_fn(grid, 2, |t, out| {
            out[0] = (kf * t).cos();
            out[1] = (kf * t).sin();
        });
        signal.kind = ControlKind::TestSinusoid { k };
        Ok(signal)
    }

    /// White-noise realization `c_w dW/dt` on each grid cell, `dW ~ N(0, dt I_m)`.
    ///
    /// Draws come from a ChaCha stream selected by `(seed, path)`, so every path is
    /// reproducible on its own regardless of generation order.
    pub fn white_noise(seed: u64, path: u64, c_w: f64, grid: TimeGrid<T>, inputs: usize) -> Result<Self> {
        if !(c_w >= 0.0) || !c_w.is_finite() {
            return Err(Error::InvalidArgument(format!("noise scale c_w must be >= 0, got {c_w}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        let dt = grid.step().to_f64().unwrap_or(f64::NAN);
        let scale = c_w / dt.sqrt();
        let cells = grid.len() - 1;
        let mut samples = DMatrix::zeros(grid.len(), inputs);
        for j in 0..cells {
            for i in 0..inputs {
                // c_w * (sqrt(dt) z) / dt
                let z: f64 = StandardNormal.sample(&mut rng);
                samples[(j, i)] = lit(scale * z);
            }
        }
        for i in 0..inputs {
            samples[(cells, i)] = samples[(cells - 1, i)];
        }
        Ok(Self { grid, samples, kind: ControlKind::WhiteNoise { seed, path, c_w } })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn inputs(&self) -> usize {
        self.samples.ncols()
    }

    pub fn samples(&self) -> &DMatrix<T> {
        &self.samples
    }

    pub fn kind(&self) -> &ControlKind {
        &self.kind
    }

    /// Evaluates `u(t)` for `t` inside grid cell `cell` (`t_cell <= t <= t_cell+1`).
    pub fn value_in_cell(&self, cell: usize, t: T, out: &mut [T]) {
        match self.kind {
            ControlKind::TestSinusoid { k } => {
                let kt = from_usize::<T>(k as usize) * t;
                out[0] = kt.cos();
                out[1] = kt.sin();
            }
            ControlKind::WhiteNoise { .. } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.samples[(cell, i)];
                }
            }
            ControlKind::Custom => {
                let theta = (t - self.grid.time(cell)) / self.grid.step();
                let next = (cell + 1).min(self.grid.len() - 1);
                for (i, o) in out.iter_mut().enumerate() {
                    let a = self.samples[(cell, i)];
                    let b = self.samples[(next, i)];
                    *o = a + (b - a) * theta;
                }
            }
        }
    }

    /// Evaluates `u(t)` anywhere on the grid span (right-continuous at nodes).
    pub fn value_at(&self, t: T, out: &mut [T]) {
        self.value_in_cell(self.cell_of(t), t, out);
    }

    /// Index of the grid cell containing `t`, clamped to the valid range.
    pub fn cell_of(&self, t: T) -> usize {
        let x = ((t - self.grid.start()) / self.grid.step()).floor();
        let j = x.to_usize().unwrap_or(0);
        j.min(self.grid.len() - 2)
    }

    /// `∫ |u(t)|^2 dt` over the whole grid span.
    pub fn l2_norm_sq(&self) -> T {
        self.cellwise_integral(|_, u| u.iter().fold(T::zero(), |a, &v| a + v * v))
    }

    /// `|u - v|_{L^2}^2` for two controls on the same grid.
    pub fn l2_distance_sq(&self, other: &Self) -> Result<T> {
        if !self.grid.same_as(&other.grid) || self.inputs() != other.inputs() {
            return Err(Error::shape("control grids", "identical grids and input counts", "different"));
        }
        let mut buf = vec![T::zero(); self.inputs()];
        Ok(self.cellwise_integral(|(j, t), u| {
            other.value_in_cell(j, t, &mut buf);
            u.iter().zip(&buf).fold(T::zero(), |a, (&x, &y)| a + (x - y) * (x - y))
        }))
    }

    /// Running integral `U(t_j) = ∫_{t_0}^{t_j} u(s) ds` at every grid point.
    pub fn running_integral(&self) -> DMatrix<T> {
        let m = self.inputs();
        let mut out = DMatrix::zeros(self.grid.len(), m);
        let mut buf = vec![T::zero(); m];
        let h = self.grid.step();
        for j in 0..self.grid.len() - 1 {
            for i in 0..m {
                out[(j + 1, i)] = out[(j, i)];
            }
            for (node, weight) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let t = self.grid.time(j) + h * lit(*node);
                self.value_in_cell(j, t, &mut buf);
                for i in 0..m {
                    out[(j + 1, i)] += h * lit::<T>(weight) * buf[i];
                }
            }
        }
        out
    }

    fn cellwise_integral(&self, mut g: impl FnMut((usize, T), &[T]) -> T) -> T {
        let mut buf = vec![T::zero(); self.inputs()];
        let h = self.grid.step();
        let mut total = T::zero();
        for j in 0..self.grid.len() - 1 {
            for (node, weight) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let t = self.grid.time(j) + h * lit(*node);
                self.value_in_cell(j, t, &mut buf);
                total += h * lit::<T>(weight) * g((j, t), &buf);
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(points: usize) -> TimeGrid<f64> {
        TimeGrid::horizon(1.0, points).unwrap()
    }

    #[test]
    fn test_sinusoid_values() {
        let u = ControlSignal::test_sinusoid(1, grid(11)).unwrap();
        assert_eq!(u.samples()[(0, 0)], 1.0);
        assert_eq!(u.samples()[(0, 1)], 0.0);
        let u = ControlSignal::test_sinusoid(37, grid(101)).unwrap();
        let mut buf = [0.0; 2];
        for j in 0..100 {
            u.value_in_cell(j, u.grid().time(j) + 0.003, &mut buf);
            assert!((buf[0].hypot(buf[1]) - 1.0).abs() < 1e-14);
        }
        assert!((u.l2_norm_sq() - 1.0).abs() < 1e-12);
        assert!(ControlSignal::<f64>::test_sinusoid(0, grid(11)).is_err());
    }

    #[test]
    fn white_noise_is_reproducible_and_scaled() {
        let a = ControlSignal::white_noise(7, 3, 0.2, grid(101), 2).unwrap();
        let b = ControlSignal::white_noise(7, 3, 0.2, grid(101), 2).unwrap();
        let c = ControlSignal::white_noise(7, 4, 0.2, grid(101), 2).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_ne!(a.samples(), c.samples());
        let z = ControlSignal::white_noise(7, 3, 0.0, grid(101), 2).unwrap();
        assert!(z.samples().iter().all(|&v| v == 0.0));
        assert!(ControlSignal::<f64>::white_noise(7, 3, -1.0, grid(11), 1).is_err());
    }

    #[test]
    fn white_noise_increment_variance() {
        // dW_j / sqrt(dt) over 1e5 draws has unit variance.
        let g = grid(100_001);
        let dt = g.step();
        let u = ControlSignal::white_noise(11, 0, 1.0, g, 1).unwrap();
        let n = 100_000;
        let z: Vec<f64> = (0..n).map(|j| u.samples()[(j, 0)] * dt / dt.sqrt()).collect();
        let mean = z.iter().sum::<f64>() / n as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn piecewise_constant_hold_uses_cell() {
        let u = ControlSignal::white_noise(1, 0, 1.0, grid(11), 1).unwrap();
        let mut buf = [0.0];
        let t_end = u.grid().time(4);
        u.value_in_cell(3, t_end, &mut buf);
        assert_eq!(buf[0], u.samples()[(3, 0)]);
        u.value_at(t_end, &mut buf);
        assert_eq!(buf[0], u.samples()[(4, 0)]);
        // L2 norm is the exact sum of squared holds.
        let exact: f64 = (0..10).map(|j| u.samples()[(j, 0)].powi(2) * 0.1).sum();
        assert!((u.l2_norm_sq() - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn linear_interpolation_integrals_are_exact() {
        let u = ControlSignal::from_fn(grid(5), 1, |t, o| o[0] = t);
        let big_u = u.running_integral();
        assert!((big_u[(4, 0)] - 0.5).abs() < 1e-15);
        assert!((u.l2_norm_sq() - 1.0 / 3.0).abs() < 1e-15);
        let v = ControlSignal::zero(grid(5), 1);
        assert!((u.l2_distance_sq(&v).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(u.l2_distance_sq(&ControlSignal::zero(grid(7), 1)).is_err());
    }
}
