//! Fitting the output matrix of the signature model and measuring errors.

mod lstsq;

pub use lstsq::{default_rcond, pivoted_qr_solve, LeastSquaresAccumulator, LeastSquaresFit, PivotedSolution};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bilinear::BilinearSystem;
use crate::control::ControlSignal;
use crate::dynamics::{simulate_output, NonlinearSystem};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::integrate::trapezoid;
use crate::scalar::{from_usize, lit, to_f64, Scalar};
use crate::signature::compute_signature;
use crate::trajectory::Trajectory;

/// Absolute slack of the triangle-inequality check on error reports.
pub const TRIANGLE_SLACK: f64 = 1e-10;

/// Stacked signature features and observed outputs, one row per (control, time) sample.
#[derive(Clone, Debug)]
pub struct RegressionDataset<T: Scalar> {
    pub features: DMatrix<T>,
    pub targets: DMatrix<T>,
    /// `(control index, grid index)` of every row.
    pub provenance: Vec<(usize, usize)>,
}

impl<T: Scalar> RegressionDataset<T> {
    pub fn rows(&self) -> usize {
        self.features.nrows()
    }
}

/// Features and targets of a single control.
#[derive(Clone, Debug)]
pub struct RegressionBlock<T: Scalar> {
    pub control: usize,
    pub features: DMatrix<T>,
    pub targets: DMatrix<T>,
}

/// Builds the regression block of one control from its truth output.
pub fn regression_block<T, F>(index: usize, u: &ControlSignal<T>, order: usize, truth: &F) -> Result<RegressionBlock<T>>
where
    T: Scalar,
    F: Fn(&ControlSignal<T>) -> Result<Trajectory<T>>,
{
    let wrap = |e: Error| Error::ControlFailed { index, source: Box::new(e) };
    let targets = truth(u).map_err(wrap)?;
    let features = compute_signature(u, order, u.grid()).map_err(wrap)?;
    if targets.len() != features.len() {
        return Err(wrap(Error::shape("truth output rows", features.len(), targets.len())));
    }
    Ok(RegressionBlock { control: index, features: features.into_values(), targets: targets.into_values() })
}

fn check_grids<T: Scalar>(controls: &[ControlSignal<T>], grid: &TimeGrid<T>) -> Result<()> {
    for (i, u) in controls.iter().enumerate() {
        if !u.grid().same_as(grid) {
            return Err(Error::ControlFailed {
                index: i,
                source: Box::new(Error::shape("control grid", grid.len(), u.grid().len())),
            });
        }
    }
    Ok(())
}

/// Regression data for `controls` against a system simulated with RK4.
pub fn assemble_dataset<T, S>(controls: &[ControlSignal<T>], sys: &S, order: usize, grid: &TimeGrid<T>) -> Result<RegressionDataset<T>>
where
    T: Scalar,
    S: NonlinearSystem<T> + ?Sized,
{
    check_grids(controls, grid)?;
    assemble_dataset_with(controls, order, |u| simulate_output(sys, u, None))
}

/// Regression data with a caller-supplied truth simulator. Controls are
/// processed in parallel; rows are stacked in control order.
pub fn assemble_dataset_with<T, F>(controls: &[ControlSignal<T>], order: usize, truth: F) -> Result<RegressionDataset<T>>
where
    T: Scalar,
    F: Fn(&ControlSignal<T>) -> Result<Trajectory<T>> + Sync,
{
    let blocks: Vec<RegressionBlock<T>> = controls
        .par_iter()
        .enumerate()
        .map(|(i, u)| regression_block(i, u, order, &truth))
        .collect::<Result<_>>()?;
    let Some(first) = blocks.first() else {
        return Err(Error::InvalidArgument("no training controls".into()));
    };
    let (n, p) = (first.features.ncols(), first.targets.ncols());
    let rows: usize = blocks.iter().map(|b| b.features.nrows()).sum();
    let mut features = DMatrix::zeros(rows, n);
    let mut targets = DMatrix::zeros(rows, p);
    let mut provenance = Vec::with_capacity(rows);
    let mut at = 0;
    for b in &blocks {
        let k = b.features.nrows();
        features.view_mut((at, 0), (k, n)).copy_from(&b.features);
        targets.view_mut((at, 0), (k, p)).copy_from(&b.targets);
        provenance.extend((0..k).map(|j| (b.control, j)));
        at += k;
    }
    Ok(RegressionDataset { features, targets, provenance })
}

/// `argmin_C ‖targets − features Cᵀ‖² + λ ‖C‖²_F` by orthogonal factorization.
///
/// Rank-deficient features with `λ = 0` yield the minimum-norm solution and a
/// logged warning with the effective rank.
pub fn fit_c<T: Scalar>(data: &RegressionDataset<T>, ridge_lambda: T) -> Result<LeastSquaresFit<T>> {
    let mut acc = LeastSquaresAccumulator::new(data.features.ncols(), data.targets.ncols());
    acc.push(&data.features, &data.targets)?;
    finish_fit(&acc, ridge_lambda)
}

fn finish_fit<T: Scalar>(acc: &LeastSquaresAccumulator<T>, ridge_lambda: T) -> Result<LeastSquaresFit<T>> {
    let fit = acc.solve(ridge_lambda, default_rcond(acc.features()))?;
    if fit.is_rank_deficient() {
        log::warn!(
            "rank-deficient regression: effective rank {} of {} features; returning minimum-norm solution",
            fit.rank,
            fit.features
        );
    }
    Ok(fit)
}

/// Streams regression blocks into a triangular accumulator, `batch` controls at
/// a time, and fits `C`. Memory stays bounded by one batch of blocks.
pub fn fit_c_streaming<T, F>(controls: &[ControlSignal<T>], order: usize, ridge_lambda: T, batch: usize, truth: F) -> Result<LeastSquaresFit<T>>
where
    T: Scalar,
    F: Fn(&ControlSignal<T>) -> Result<Trajectory<T>> + Sync,
{
    if controls.is_empty() {
        return Err(Error::InvalidArgument("no training controls".into()));
    }
    let mut acc: Option<LeastSquaresAccumulator<T>> = None;
    for (chunk_index, chunk) in controls.chunks(batch.max(1)).enumerate() {
        let offset = chunk_index * batch.max(1);
        let blocks: Vec<RegressionBlock<T>> = chunk
            .par_iter()
            .enumerate()
            .map(|(i, u)| regression_block(offset + i, u, order, &truth))
            .collect::<Result<_>>()?;
        for b in blocks {
            let acc = acc.get_or_insert_with(|| LeastSquaresAccumulator::new(b.features.ncols(), b.targets.ncols()));
            acc.push(&b.features, &b.targets)?;
        }
        log::debug!("absorbed {} of {} training controls", offset + chunk.len(), controls.len());
    }
    finish_fit(acc.as_ref().expect("at least one block"), ridge_lambda)
}

/// `sqrt( (1/K) Σ_k ∫ ‖a_k(t) − b_k(t)‖² dt )` with the trapezoid rule.
pub fn error_l2<T: Scalar>(a: &[Trajectory<T>], b: &[Trajectory<T>]) -> Result<T> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::shape("trajectory lists", a.len(), b.len()));
    }
    let mut total = T::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.grid().same_as(y.grid()) || x.dim() != y.dim() {
            return Err(Error::shape("trajectory grids", x.len(), y.len()));
        }
        let sq: Vec<T> = (x.values() - y.values()).row_iter().map(|r| r.norm_squared()).collect();
        total += trapezoid(&sq, x.grid().step());
    }
    Ok((total / from_usize::<T>(a.len())).sqrt())
}

/// The three error functionals for one reduced order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport<T> {
    pub r: usize,
    /// Truth vs full signature model.
    pub e_sig: T,
    /// Full vs reduced signature model.
    pub e_mor: T,
    /// Truth vs reduced signature model.
    pub e_red_sig: T,
}

/// Outputs of `sys` for every control, in control order.
pub fn model_outputs<T: Scalar>(sys: &BilinearSystem<T>, controls: &[ControlSignal<T>]) -> Result<Vec<Trajectory<T>>> {
    controls
        .par_iter()
        .enumerate()
        .map(|(i, u)| sys.simulate_output(u, 1).map_err(|e| Error::ControlFailed { index: i, source: Box::new(e) }))
        .collect()
}

/// Truth outputs for every control, in control order.
pub fn truth_outputs<T, F>(controls: &[ControlSignal<T>], truth: F) -> Result<Vec<Trajectory<T>>>
where
    T: Scalar,
    F: Fn(&ControlSignal<T>) -> Result<Trajectory<T>> + Sync,
{
    controls
        .par_iter()
        .enumerate()
        .map(|(i, u)| truth(u).map_err(|e| Error::ControlFailed { index: i, source: Box::new(e) }))
        .collect()
}

/// Errors of a reduced model of order `r` against the full model and the truth.
pub fn evaluate_pipeline<T: Scalar>(
    full: &BilinearSystem<T>,
    reduced: &BilinearSystem<T>,
    truth: &[Trajectory<T>],
    controls: &[ControlSignal<T>],
) -> Result<ErrorReport<T>> {
    let full_out = model_outputs(full, controls)?;
    evaluate_reduced(&full_out, reduced, truth, controls)
}

/// [`evaluate_pipeline`] with precomputed full-model outputs.
pub fn evaluate_reduced<T: Scalar>(
    full_outputs: &[Trajectory<T>],
    reduced: &BilinearSystem<T>,
    truth: &[Trajectory<T>],
    controls: &[ControlSignal<T>],
) -> Result<ErrorReport<T>> {
    let red_out = model_outputs(reduced, controls)?;
    let e_sig = error_l2(truth, full_outputs)?;
    let e_mor = error_l2(full_outputs, &red_out)?;
    let e_red_sig = error_l2(truth, &red_out)?;
    if e_red_sig > e_sig + e_mor + lit(TRIANGLE_SLACK) {
        return Err(Error::Invariant(format!(
            "triangle inequality violated: E_red_sig {:.6e} > E_sig {:.6e} + E_MOR {:.6e}",
            to_f64(e_red_sig),
            to_f64(e_sig),
            to_f64(e_mor)
        )));
    }
    Ok(ErrorReport { r: reduced.dim(), e_sig, e_mor, e_red_sig })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    #[test]
    fn error_functional_examples() {
        let grid = TimeGrid::horizon(1.0_f64, 1001).unwrap();
        let zeros = Trajectory::new(grid, DMatrix::zeros(1001, 1)).unwrap();
        let ones = Trajectory::new(grid, DMatrix::from_element(1001, 1, 1.0)).unwrap();
        let ramp = Trajectory::new(grid, DMatrix::from_fn(1001, 1, |j, _| grid.time(j))).unwrap();
        assert_eq!(error_l2(&[ones.clone()], &[ones.clone()]).unwrap(), 0.0);
        assert!((error_l2(&[ones], &[zeros.clone()]).unwrap() - 1.0).abs() < 1e-14);
        assert!((error_l2(&[ramp], &[zeros.clone()]).unwrap() - (1.0_f64 / 3.0).sqrt()).abs() < 1e-6);
        assert!(error_l2::<f64>(&[], &[]).is_err());
        let other = Trajectory::new(TimeGrid::horizon(1.0, 11).unwrap(), DMatrix::zeros(11, 1)).unwrap();
        assert!(error_l2(&[zeros], &[other]).is_err());
    }
}
