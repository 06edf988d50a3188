use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Uniform time grid `t_j = start + j * step`, `j = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<T> {
    start: T,
    step: T,
    len: usize,
}

impl<T: Scalar> TimeGrid<T> {
    /// Grid with `points` samples covering `[start, end]`.
    pub fn new(start: T, end: T, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidArgument(format!(
                "time grid needs at least 2 points, got {points}"
            )));
        }
        if !(end > start) {
            return Err(Error::InvalidArgument(format!(
                "time grid end {end} must exceed start {start}"
            )));
        }
        let step = (end - start) / from_usize::<T>(points - 1);
        Ok(Self { start, step, len: points })
    }

    /// Grid on `[0, horizon]`.
    pub fn horizon(horizon: T, points: usize) -> Result<Self> {
        Self::new(T::zero(), horizon, points)
    }

    /// Validates that explicit sample times are uniformly spaced and builds the grid.
    pub fn from_times(times: &[T]) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidArgument("need at least 2 sample times".into()));
        }
        let n = times.len();
        let grid = Self::new(times[0], times[n - 1], n)?;
        let tol = lit::<T>(1e-9) * grid.step;
        for (j, &t) in times.iter().enumerate() {
            if (t - grid.time(j)).abs() > tol {
                return Err(Error::NonUniformGrid(format!(
                    "sample {j} at {t} deviates from uniform spacing {}",
                    grid.step
                )));
            }
        }
        Ok(grid)
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn end(&self) -> T {
        self.time(self.len - 1)
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn time(&self, j: usize) -> T {
        self.start + self.step * from_usize::<T>(j)
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len).map(move |j| self.time(j))
    }

    /// Sub-grid from index `from` to the end (shares the spacing).
    pub fn tail(&self, from: usize) -> Result<Self> {
        if from + 2 > self.len {
            return Err(Error::InvalidArgument(format!(
                "tail from index {from} leaves fewer than 2 points of {}",
                self.len
            )));
        }
        Ok(Self { start: self.time(from), step: self.step, len: self.len - from })
    }

    /// Sub-grid of indices `from..=to`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if to <= from || to >= self.len {
            return Err(Error::InvalidArgument(format!(
                "invalid grid slice {from}..={to} of {}",
                self.len
            )));
        }
        Ok(Self { start: self.time(from), step: self.step, len: to - from + 1 })
    }

    /// Grid with the same span and `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            start: self.start,
            step: self.step / from_usize::<T>(factor.max(1)),
            len: (self.len - 1) * factor.max(1) + 1,
        }
    }

    /// Index of the grid point equal to `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: T) -> Option<usize> {
        let x = (t - self.start) / self.step;
        let j = x.round();
        if (x - j).abs() > lit(1e-6) || j < T::zero() {
            return None;
        }
        let j = j.to_usize()?;
        (j < self.len).then_some(j)
    }

    /// True when both grids have the same start, step, and length.
    pub fn same_as(&self, other: &Self) -> bool {
        let tol = lit::<T>(1e-12) * (self.step.abs() + self.start.abs());
        self.len == other.len
            && (self.start - other.start).abs() <= tol
            && (self.step - other.step).abs() <= tol
    }
}
