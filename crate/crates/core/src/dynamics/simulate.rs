use nalgebra::DMatrix;
use rustfft::FftNum;

use super::reaction_diffusion::ReactionDiffusion;
use super::NonlinearSystem;
use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::integrate::integrate_on_grid;
use crate::scalar::{to_f64, Scalar};
use crate::trajectory::Trajectory;

/// Largest `|h λ|` allowed for explicit RK4 steps on the stiff spectrum
/// (the real stability interval ends near 2.785).
const RK4_STABILITY_MARGIN: f64 = 2.5;

/// How the ground-truth model is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruthIntegrator {
    /// Classical RK4; `None` picks the smallest stable number of substeps per cell.
    Rk4 { substeps: Option<usize> },
    /// Exponential RK4 in the sine basis (reaction–diffusion only).
    Etdrk4 { substeps: usize },
}

impl Default for TruthIntegrator {
    fn default() -> Self {
        TruthIntegrator::Rk4 { substeps: None }
    }
}

/// RK4 steps per grid cell keeping `h ρ` inside the stability interval,
/// where `ρ` is the system's stiffness bound.
pub fn stable_substeps<T: Scalar, S: NonlinearSystem<T> + ?Sized>(sys: &S, dt: T) -> usize {
    let rho = to_f64(sys.stiffness() * dt);
    if rho <= RK4_STABILITY_MARGIN {
        1
    } else {
        (rho / RK4_STABILITY_MARGIN).ceil() as usize
    }
}

fn check_inputs<T: Scalar, S: NonlinearSystem<T> + ?Sized>(sys: &S, u: &ControlSignal<T>) -> Result<()> {
    if u.inputs() != sys.inputs() {
        return Err(Error::shape("control inputs", sys.inputs(), u.inputs()));
    }
    Ok(())
}

/// State trajectory on the control's grid with automatically chosen RK4 substeps.
pub fn simulate_nonlinear<T: Scalar, S: NonlinearSystem<T> + ?Sized>(
    sys: &S,
    u: &ControlSignal<T>,
    grid: &TimeGrid<T>,
) -> Result<Trajectory<T>> {
    if !u.grid().same_as(grid) {
        return Err(Error::shape("control sampling grid", grid.len(), u.grid().len()));
    }
    simulate_nonlinear_with(sys, u, stable_substeps(sys, grid.step()))
}

/// State trajectory with `substeps` RK4 steps per grid cell.
pub fn simulate_nonlinear_with<T: Scalar, S: NonlinearSystem<T> + ?Sized>(
    sys: &S,
    u: &ControlSignal<T>,
    substeps: usize,
) -> Result<Trajectory<T>> {
    check_inputs(sys, u)?;
    let grid = *u.grid();
    let d = sys.state_dim();
    let mut values = DMatrix::zeros(grid.len(), d);
    run_rk4(sys, u, substeps, |j, x| values.row_mut(j).copy_from_slice(x))?;
    Trajectory::new(grid, values)
}

fn run_rk4<T: Scalar, S: NonlinearSystem<T> + ?Sized>(
    sys: &S,
    u: &ControlSignal<T>,
    substeps: usize,
    record: impl FnMut(usize, &[T]),
) -> Result<()> {
    let mut x = sys.initial_state().as_slice().to_vec();
    let mut buf = vec![T::zero(); sys.inputs()];
    integrate_on_grid(
        u.grid(),
        &mut x,
        substeps,
        |cell, t, x, dx| {
            u.value_in_cell(cell, t, &mut buf);
            sys.rhs(x, &buf, dx);
        },
        record,
    )
}

/// `c(x)` applied to every sample of a state trajectory.
pub fn output_trajectory<T: Scalar, S: NonlinearSystem<T> + ?Sized>(sys: &S, states: &Trajectory<T>) -> Result<Trajectory<T>> {
    if states.dim() != sys.state_dim() {
        return Err(Error::shape("state trajectory width", sys.state_dim(), states.dim()));
    }
    let p = sys.outputs();
    let mut values = DMatrix::zeros(states.len(), p);
    let mut y = vec![T::zero(); p];
    let mut x = vec![T::zero(); states.dim()];
    for j in 0..states.len() {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = states.values()[(j, i)];
        }
        sys.output(&x, &mut y);
        values.row_mut(j).copy_from_slice(&y);
    }
    Trajectory::new(*states.grid(), values)
}

/// Output trajectory of a generic system with RK4, without storing states.
pub fn simulate_output<T: Scalar, S: NonlinearSystem<T> + ?Sized>(
    sys: &S,
    u: &ControlSignal<T>,
    substeps: Option<usize>,
) -> Result<Trajectory<T>> {
    check_inputs(sys, u)?;
    let substeps = substeps.unwrap_or_else(|| stable_substeps(sys, u.grid().step()));
    let p = sys.outputs();
    let mut values = DMatrix::zeros(u.grid().len(), p);
    let mut y = vec![T::zero(); p];
    run_rk4(sys, u, substeps, |j, x| {
        sys.output(x, &mut y);
        values.row_mut(j).copy_from_slice(&y);
    })?;
    Trajectory::new(*u.grid(), values)
}

impl<T: Scalar + FftNum> ReactionDiffusion<T> {
    /// Output trajectory with the chosen truth integrator.
    pub fn simulate_output_with(&self, u: &ControlSignal<T>, integrator: TruthIntegrator) -> Result<Trajectory<T>> {
        match integrator {
            TruthIntegrator::Rk4 { substeps } => simulate_output(self, u, substeps),
            TruthIntegrator::Etdrk4 { substeps } => self.simulate_output_etd(u, substeps),
        }
    }
}

/// The test family `u^(k)(t) = (cos kt, sin kt)`.
pub fn test_control<T: Scalar>(k: u32, grid: TimeGrid<T>) -> Result<ControlSignal<T>> {
    ControlSignal::test_sinusoid(k, grid)
}

/// White-noise training control `c_w dW/dt` for path `path` of the stream `seed`.
pub fn training_control<T: Scalar>(seed: u64, path: u64, c_w: f64, grid: TimeGrid<T>, inputs: usize) -> Result<ControlSignal<T>> {
    ControlSignal::white_noise(seed, path, c_w, grid, inputs)
}

/// `sup_t ‖x(t; u) − x(t; v)‖ / ‖u − v‖_{L²}` with `substeps` RK4 steps per cell.
pub fn lipschitz_probe<T: Scalar, S: NonlinearSystem<T> + ?Sized>(
    sys: &S,
    u: &ControlSignal<T>,
    v: &ControlSignal<T>,
    substeps: usize,
) -> Result<T> {
    let dist = u.l2_distance_sq(v)?.sqrt();
    if !(dist > T::zero()) {
        return Err(Error::InvalidArgument("Lipschitz probe needs distinct controls".into()));
    }
    let xu = simulate_nonlinear_with(sys, u, substeps)?;
    let xv = simulate_nonlinear_with(sys, v, substeps)?;
    let sup = (xu.values() - xv.values())
        .row_iter()
        .map(|r| r.norm())
        .fold(T::zero(), |a, b| a.max(b));
    Ok(sup / dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{CubicExample, LinearSystem};
    use nalgebra::DVector;

    #[test]
    fn constant_when_nothing_moves() {
        let sys = LinearSystem::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 1), DMatrix::identity(2, 2), DVector::from_vec(vec![0.3, -1.0]))
            .unwrap();
        let grid = TimeGrid::horizon(1.0, 11).unwrap();
        let u = ControlSignal::zero(grid, 1);
        let traj = simulate_nonlinear(&sys, &u, &grid).unwrap();
        for j in 0..11 {
            assert_eq!(traj.sample(j), DVector::from_vec(vec![0.3, -1.0]));
        }
    }

    #[test]
    fn linear_matches_matrix_exponential() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.5, 0.0, 0.2, -0.3, 0.4, 0.0, -0.6, 0.1]);
        let x0 = DVector::from_vec(vec![1.0, -0.5, 0.25]);
        let sys = LinearSystem::new(a.clone(), DMatrix::zeros(3, 1), DMatrix::identity(3, 3), x0.clone()).unwrap();
        let grid = TimeGrid::horizon(1.0, 201).unwrap();
        let traj = simulate_nonlinear(&sys, &ControlSignal::zero(grid, 1), &grid).unwrap();
        let exact = a.exp() * x0;
        assert!((traj.last() - exact).amax() < 1e-8);
    }

    #[test]
    fn stiffness_selects_substeps() {
        let rd = ReactionDiffusion::<f64>::new(100).unwrap();
        let s = stable_substeps(&rd, 1e-3);
        assert!(s >= 16 && s <= 18, "{s}");
        let cubic = CubicExample::new(2, DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(stable_substeps(&cubic, 1e-3), 1);
    }

    #[test]
    fn probe_rejects_identical_controls() {
        let cubic = CubicExample::new(2, DMatrix::zeros(2, 2)).unwrap();
        let grid = TimeGrid::horizon(1.0, 11).unwrap();
        let u = ControlSignal::zero(grid, 1);
        assert!(lipschitz_probe(&cubic, &u, &u, 1).is_err());
    }
}
