//! Nonlinear ground-truth systems `x' = f_0(x) + Σ f_i(x) u_i`, `y = c(x)`, and
//! the control families used to probe them.

mod cubic;
mod etd;
mod linear;
mod reaction_diffusion;
mod simulate;

pub use cubic::CubicExample;
pub use etd::{dst1, Etdrk4};
pub use linear::LinearSystem;
pub use reaction_diffusion::ReactionDiffusion;
pub use simulate::{
    lipschitz_probe, output_trajectory, simulate_nonlinear, simulate_nonlinear_with, simulate_output, stable_substeps,
    test_control, training_control, TruthIntegrator,
};

use nalgebra::DVector;

use crate::scalar::Scalar;

/// A control-affine nonlinear system.
pub trait NonlinearSystem<T: Scalar>: Send + Sync {
    fn state_dim(&self) -> usize;

    fn inputs(&self) -> usize;

    fn outputs(&self) -> usize;

    fn initial_state(&self) -> DVector<T>;

    /// `out = f_0(x)`.
    fn drift(&self, x: &[T], out: &mut [T]);

    /// `out += scale * f_i(x)` for input channel `i` (0-based).
    fn add_input_field(&self, i: usize, x: &[T], scale: T, out: &mut [T]);

    /// `y = c(x)`.
    fn output(&self, x: &[T], y: &mut [T]);

    /// Bound on the spectral radius of the drift Jacobian on the operating
    /// region; zero when the system is not stiff.
    fn stiffness(&self) -> T {
        T::zero()
    }

    /// `out = f_0(x) + Σ f_i(x) u_i`.
    fn rhs(&self, x: &[T], u: &[T], out: &mut [T]) {
        self.drift(x, out);
        for (i, &ui) in u.iter().enumerate() {
            if ui != T::zero() {
                self.add_input_field(i, x, ui, out);
            }
        }
    }
}
