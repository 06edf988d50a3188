//! Time-limited reachability and observability Gramians of bilinear systems.

use nalgebra::{DMatrix, DVector};

use crate::bilinear::{BilinearSystem, Generator};
use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::integrate::{guard, simpson, Rk4};
use crate::linalg::symmetrize;
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Relative size of the first series term that must vanish for a nilpotent system.
pub const NILPOTENCY_TOLERANCE: f64 = 1e-9;

/// Relative slack of the energy-bound flags.
pub const ENERGY_RELATIVE_SLACK: f64 = 1e-6;

/// Absolute slack of the energy-bound flags, in units of `exp(‖u‖²) ‖v‖²`.
pub const ENERGY_ABSOLUTE_SLACK: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramianMethod {
    Series,
    Ode,
}

/// Reachability Gramian `P` and observability Gramian `Q` on `[0, horizon]`.
#[derive(Clone, Debug)]
pub struct GramianPair<T: Scalar> {
    pub p: DMatrix<T>,
    pub q: DMatrix<T>,
    pub horizon: T,
    pub method: GramianMethod,
}

fn check_square<T: Scalar>(generators: &[Generator<T>], x: &DMatrix<T>) -> Result<()> {
    let n = generators.first().map(|g| g.dim()).unwrap_or(0);
    if x.shape() != (n, n) {
        return Err(Error::shape("Lyapunov operand", format!("{n}x{n}"), format!("{:?}", x.shape())));
    }
    Ok(())
}

/// `𝓛(X) = A_0 X + X A_0ᵀ + Σ_{i≥1} A_i X A_iᵀ`, symmetrized.
pub fn lyapunov_apply<T: Scalar>(generators: &[Generator<T>], x: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_square(generators, x)?;
    let ax = generators[0].left_mul(x);
    let mut out = &ax + ax.transpose();
    for g in &generators[1..] {
        out += g.sandwich(x);
    }
    symmetrize(&mut out);
    Ok(out)
}

/// `𝓛*(X) = A_0ᵀ X + X A_0 + Σ_{i≥1} A_iᵀ X A_i`, symmetrized.
pub fn lyapunov_adjoint_apply<T: Scalar>(generators: &[Generator<T>], x: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_square(generators, x)?;
    let ax = generators[0].left_mul_transpose(x);
    let mut out = &ax + ax.transpose();
    for g in &generators[1..] {
        out += g.sandwich_transpose(x);
    }
    symmetrize(&mut out);
    Ok(out)
}

/// `Σ_{j=0}^{2N} T^{j+1}/(j+1)! 𝓛^j(X_0)` with a vanishing check on term `2N+1`.
fn series<T: Scalar>(
    generators: &[Generator<T>],
    seed: DMatrix<T>,
    order: usize,
    horizon: T,
    apply: fn(&[Generator<T>], &DMatrix<T>) -> Result<DMatrix<T>>,
) -> Result<DMatrix<T>> {
    let mut term = seed;
    symmetrize(&mut term);
    let mut coefficient = horizon;
    let mut total = &term * coefficient;
    let mut largest = term.amax();
    for j in 1..=2 * order + 1 {
        term = apply(generators, &term)?;
        if j == 2 * order + 1 {
            let size = term.amax();
            let rel = if largest > T::zero() { size / largest } else { size };
            if rel > lit(NILPOTENCY_TOLERANCE) {
                return Err(Error::NonNilpotent { order: j, norm: to_f64(rel) });
            }
            break;
        }
        largest = largest.max(term.amax());
        coefficient = coefficient * horizon / from_usize::<T>(j + 1);
        total += &term * coefficient;
    }
    symmetrize(&mut total);
    Ok(total)
}

/// Reachability Gramian by the finite Lyapunov series for generators nilpotent of order `order + 1`.
pub fn reachability_series<T: Scalar>(sys: &BilinearSystem<T>, order: usize, horizon: T) -> Result<DMatrix<T>> {
    let s0 = sys.initial_subspace();
    series(sys.generators(), s0 * s0.transpose(), order, horizon, lyapunov_apply)
}

/// Observability Gramian by the finite adjoint Lyapunov series.
pub fn observability_series<T: Scalar>(sys: &BilinearSystem<T>, order: usize, horizon: T) -> Result<DMatrix<T>> {
    let c = sys.output_matrix().ok_or(Error::Unlearned)?;
    series(sys.generators(), c.tr_mul(c), order, horizon, lyapunov_adjoint_apply)
}

/// Both Gramians by the nilpotent series; exact up to rounding.
pub fn gramian_series<T: Scalar>(sys: &BilinearSystem<T>, order: usize, horizon: T) -> Result<GramianPair<T>> {
    check_horizon(horizon)?;
    let (p, q) = rayon::join(
        || reachability_series(sys, order, horizon),
        || observability_series(sys, order, horizon),
    );
    Ok(GramianPair { p: p?, q: q?, horizon, method: GramianMethod::Series })
}

fn check_horizon<T: Scalar>(horizon: T) -> Result<()> {
    if !(horizon > T::zero()) {
        return Err(Error::InvalidArgument(format!("Gramian horizon must be positive, got {horizon}")));
    }
    Ok(())
}

/// `∫_0^T Z(t) dt` for `Z' = op(Z)`, `Z(0) = seed`: RK4 on `steps` uniform steps,
/// trapezoid accumulation on the same nodes.
fn integrate_matrix_ode<T: Scalar>(
    generators: &[Generator<T>],
    seed: DMatrix<T>,
    horizon: T,
    steps: usize,
    apply: fn(&[Generator<T>], &DMatrix<T>) -> Result<DMatrix<T>>,
) -> Result<DMatrix<T>> {
    let n = seed.nrows();
    let h = horizon / from_usize::<T>(steps);
    let half = h * lit(0.5);
    let mut z = seed;
    symmetrize(&mut z);
    let mut total = &z * half;
    let mut rk = Rk4::new(n * n);
    let mut failure = None;
    let mut rhs = |_t: T, x: &[T], dx: &mut [T]| {
        let zm = DMatrix::from_column_slice(n, n, x);
        match apply(generators, &zm) {
            Ok(d) => dx.copy_from_slice(d.as_slice()),
            Err(e) => failure = Some(e),
        }
    };
    for s in 0..steps {
        let t = h * from_usize::<T>(s);
        rk.step(&mut rhs, t, h, z.as_mut_slice());
        symmetrize(&mut z);
        guard(z.as_slice(), s + 1, t + h)?;
        let weight = if s + 1 == steps { half } else { h };
        total += &z * weight;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    symmetrize(&mut total);
    Ok(total)
}

/// Both Gramians by direct integration of the matrix ODEs for `Z` and `Z*`.
pub fn gramian_ode<T: Scalar>(sys: &BilinearSystem<T>, horizon: T, steps: usize) -> Result<GramianPair<T>> {
    check_horizon(horizon)?;
    if steps < 100 {
        return Err(Error::InvalidArgument(format!("Gramian ODE needs at least 100 steps, got {steps}")));
    }
    let c = sys.output_matrix().ok_or(Error::Unlearned)?;
    let s0 = sys.initial_subspace();
    let (p, q) = rayon::join(
        || integrate_matrix_ode(sys.generators(), s0 * s0.transpose(), horizon, steps, lyapunov_apply),
        || integrate_matrix_ode(sys.generators(), c.tr_mul(c), horizon, steps, lyapunov_adjoint_apply),
    );
    Ok(GramianPair { p: p?, q: q?, horizon, method: GramianMethod::Ode })
}

/// Simulated energy against its closed-form bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl EnergyReport {
    fn new(lhs: f64, rhs: f64, unit: f64) -> Self {
        let holds = lhs <= rhs * (1.0 + ENERGY_RELATIVE_SLACK) + ENERGY_ABSOLUTE_SLACK * unit;
        Self { lhs, rhs, holds }
    }
}

/// `∫_0^T |⟨S(t), p_i⟩|² dt` against `λ_i exp(‖u‖²) ‖v‖²` for an eigenpair of `P`.
///
/// The horizon is the end of the control's grid.
pub fn reachability_energy_check<T: Scalar>(
    sys: &BilinearSystem<T>,
    u: &ControlSignal<T>,
    p_i: &DVector<T>,
    lambda_i: T,
) -> Result<EnergyReport> {
    if p_i.len() != sys.dim() {
        return Err(Error::shape("eigenvector length", sys.dim(), p_i.len()));
    }
    let states = sys.simulate(u, u.grid())?;
    let proj: Vec<T> = (states.values() * p_i).iter().map(|&s| s * s).collect();
    let lhs = to_f64(simpson(&proj, u.grid().step()));
    let unit = to_f64(u.l2_norm_sq()).exp() * to_f64(sys.initial_coefficients().norm_squared());
    Ok(EnergyReport::new(lhs, to_f64(lambda_i) * unit, unit))
}

/// `∫_{t_0}^T ‖C Φ(t, t_0) q_i‖² dt` against `μ_i exp(‖u‖²)` for an eigenpair of `Q`.
///
/// `Φ(t, t_0) q_i` is realized by restarting the system at `t_0` from `q_i`;
/// `t_0` must be a grid point of `u` before the horizon.
pub fn observability_energy_check<T: Scalar>(
    sys: &BilinearSystem<T>,
    u: &ControlSignal<T>,
    q_i: &DVector<T>,
    mu_i: T,
    t0: T,
) -> Result<EnergyReport> {
    if q_i.len() != sys.dim() {
        return Err(Error::shape("eigenvector length", sys.dim(), q_i.len()));
    }
    let grid = u.grid();
    let start = grid
        .index_of(t0)
        .filter(|&j| j + 1 < grid.len())
        .ok_or_else(|| Error::InvalidArgument(format!("start time {t0} must be a grid point before {}", grid.end())))?;
    let states = sys.simulate_from(q_i, u, start, 1)?;
    let outputs = sys.output(&states)?;
    let energy: Vec<T> = outputs.values().row_iter().map(|r| r.norm_squared()).collect();
    let lhs = to_f64(simpson(&energy, grid.step()));
    let unit = to_f64(u.l2_norm_sq()).exp();
    Ok(EnergyReport::new(lhs, to_f64(mu_i) * unit, unit))
}
