use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scalar::Scalar;

/// Time-indexed samples: row `j` of `values` is the sample at `grid.time(j)`.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Scalar> {
    grid: TimeGrid<T>,
    values: DMatrix<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(grid: TimeGrid<T>, values: DMatrix<T>) -> Result<Self> {
        if values.nrows() != grid.len() {
            return Err(Error::shape("trajectory rows", grid.len(), values.nrows()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<T> {
        self.values
    }

    /// Number of channels per sample.
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn sample(&self, j: usize) -> DVector<T> {
        self.values.row(j).transpose()
    }

    pub fn last(&self) -> DVector<T> {
        self.sample(self.len() - 1)
    }
}
