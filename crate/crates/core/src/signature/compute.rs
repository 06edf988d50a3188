use nalgebra::{DMatrix, DVector};

use super::words::{level_offset, signature_dimension, WordIndex};
use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::integrate::integrate_on_grid;
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

/// One truncated signature `S^N_{a,b}(Û)` in flat, level-major layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureVector<T: Scalar> {
    channels: usize,
    order: usize,
    data: DVector<T>,
}

impl<T: Scalar> SignatureVector<T> {
    pub fn new(channels: usize, order: usize, data: DVector<T>) -> Result<Self> {
        let n = signature_dimension(channels, order)?;
        if data.len() != n {
            return Err(Error::shape("signature vector length", n, data.len()));
        }
        Ok(Self { channels, order, data })
    }

    /// The signature of a constant path: `1` followed by zeros.
    pub fn trivial(channels: usize, order: usize) -> Result<Self> {
        let mut data = DVector::zeros(signature_dimension(channels, order)?);
        data[0] = T::one();
        Ok(Self { channels, order, data })
    }

    /// Row `j` of a signature trajectory.
    pub fn from_trajectory(traj: &Trajectory<T>, channels: usize, order: usize, j: usize) -> Result<Self> {
        Self::new(channels, order, traj.sample(j))
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn data(&self) -> &DVector<T> {
        &self.data
    }

    pub fn into_data(self) -> DVector<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Entries of level `k`.
    pub fn level(&self, k: usize) -> &[T] {
        let from = level_offset(self.channels, k);
        let to = level_offset(self.channels, k + 1);
        &self.data.as_slice()[from..to]
    }

    pub fn get(&self, word: &WordIndex) -> T {
        self.data[word.flat_offset]
    }
}

/// Signature trajectory of `Û = (t, ∫u)` at every point of `grid`, truncated at `order`.
///
/// Row `j` of the result is `S^N_{t_0, t_j}(Û)`. One RK4 step is taken per grid cell.
pub fn compute_signature<T: Scalar>(u: &ControlSignal<T>, order: usize, grid: &TimeGrid<T>) -> Result<Trajectory<T>> {
    compute_signature_with(u, order, grid, 1)
}

/// [`compute_signature`] with `substeps` RK4 steps per grid cell.
pub fn compute_signature_with<T: Scalar>(
    u: &ControlSignal<T>,
    order: usize,
    grid: &TimeGrid<T>,
    substeps: usize,
) -> Result<Trajectory<T>> {
    if !u.grid().same_as(grid) {
        return Err(Error::shape(
            "control sampling grid",
            format!("{} points on [{}, {}]", grid.len(), grid.start(), grid.end()),
            format!("{} points on [{}, {}]", u.grid().len(), u.grid().start(), u.grid().end()),
        ));
    }
    let channels = u.inputs() + 1;
    let n = signature_dimension(channels, order)?;
    let offsets: Vec<usize> = (0..=order).map(|k| level_offset(channels, k)).collect();

    let mut state = vec![T::zero(); n];
    state[0] = T::one();
    let mut hat_u = vec![T::one(); channels];
    let mut values = DMatrix::zeros(grid.len(), n);
    integrate_on_grid(
        grid,
        &mut state,
        substeps,
        |cell, t, x, dx| {
            u.value_in_cell(cell, t, &mut hat_u[1..]);
            dx[0] = T::zero();
            for k in 0..order {
                let (from, to) = (offsets[k], offsets[k + 1]);
                for (a, &xa) in x[from..to].iter().enumerate() {
                    let base = to + a * channels;
                    for (i, &ui) in hat_u.iter().enumerate() {
                        dx[base + i] = xa * ui;
                    }
                }
            }
        },
        |j, x| values.row_mut(j).copy_from_slice(x),
    )?;
    Trajectory::new(*grid, values)
}
