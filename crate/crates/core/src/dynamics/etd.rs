//! Exponential time differencing for the reaction–diffusion model.
//!
//! The Dirichlet Laplacian is diagonal in the discrete sine basis, so the stiff
//! linear part is propagated exactly and only the reaction and input terms are
//! handled by the fourth-order Cox–Matthews stages.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};

use super::reaction_diffusion::ReactionDiffusion;
use super::NonlinearSystem;
use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::integrate::guard;
use crate::scalar::{from_usize, lit, Scalar};
use crate::trajectory::Trajectory;

/// Orthonormal DST-I workspace: `S_{jk} = sqrt(2/(d+1)) sin(π j k / (d+1))`, `S = Sᵀ = S⁻¹`.
struct Dst<T: Scalar + FftNum> {
    fft: Arc<dyn Fft<T>>,
    buf: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
    scale: T,
}

impl<T: Scalar + FftNum> Dst<T> {
    fn new(d: usize) -> Self {
        let len = 2 * (d + 1);
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        let scale = (lit::<T>(2.0) / from_usize::<T>(d + 1)).sqrt() * lit(0.5);
        Self { fft, buf: vec![Complex::new(T::zero(), T::zero()); len], scratch, scale }
    }

    fn apply(&mut self, x: &[T], out: &mut [T]) {
        let d = x.len();
        let zero = Complex::new(T::zero(), T::zero());
        self.buf[0] = zero;
        self.buf[d + 1] = zero;
        for (j, &v) in x.iter().enumerate() {
            self.buf[j + 1] = Complex::new(v, T::zero());
            self.buf[2 * d + 1 - j] = Complex::new(-v, T::zero());
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (k, o) in out.iter_mut().enumerate() {
            *o = -self.buf[k + 1].im * self.scale;
        }
    }
}

/// Orthonormal discrete sine transform (type I) of `x`; it is its own inverse.
pub fn dst1<T: Scalar + FftNum>(x: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    Dst::new(x.len()).apply(x, &mut out);
    out
}

/// `φ_1, φ_2, φ_3` at `z`, by Taylor series near zero.
fn phi<T: Scalar>(z: T) -> [T; 3] {
    if z.abs() < T::one() {
        let mut out = [T::zero(); 3];
        for (k, o) in out.iter_mut().enumerate() {
            // Σ_j z^j / (j + k + 1)!
            let mut term = T::one();
            for f in 2..=k + 1 {
                term /= from_usize::<T>(f);
            }
            let mut sum = T::zero();
            for j in 0..30 {
                sum += term;
                term = term * z / from_usize::<T>(j + k + 2);
            }
            *o = sum;
        }
        out
    } else {
        let e = z.exp();
        let p1 = (e - T::one()) / z;
        let p2 = (p1 - T::one()) / z;
        let p3 = (p2 - lit::<T>(0.5)) / z;
        [p1, p2, p3]
    }
}

/// Fourth-order exponential Runge–Kutta stepper for [`ReactionDiffusion`].
pub struct Etdrk4<T: Scalar + FftNum> {
    sys: ReactionDiffusion<T>,
    dst: Dst<T>,
    h: T,
    e: Vec<T>,
    e2: Vec<T>,
    q: Vec<T>,
    f1: Vec<T>,
    f2: Vec<T>,
    f3: Vec<T>,
    phys: Vec<T>,
    react: Vec<T>,
    stages: [Vec<T>; 4],
    points: [Vec<T>; 3],
}

impl<T: Scalar + FftNum> Etdrk4<T> {
    /// Stepper with fixed step `h`.
    pub fn new(sys: &ReactionDiffusion<T>, h: T) -> Self {
        let d = sys.state_dim();
        let scale = lit::<T>(4.0) / (sys.mesh_width() * sys.mesh_width());
        let pi = T::pi();
        let mut e = Vec::with_capacity(d);
        let mut e2 = Vec::with_capacity(d);
        let mut q = Vec::with_capacity(d);
        let mut f1 = Vec::with_capacity(d);
        let mut f2 = Vec::with_capacity(d);
        let mut f3 = Vec::with_capacity(d);
        for k in 1..=d {
            let s = (pi * from_usize::<T>(k) / from_usize::<T>(2 * (d + 1))).sin();
            let z = -scale * s * s * h;
            let half = phi(z * lit(0.5));
            let [p1, p2, p3] = phi(z);
            e.push(z.exp());
            e2.push((z * lit(0.5)).exp());
            q.push(h * lit(0.5) * half[0]);
            f1.push(h * (p1 - lit::<T>(3.0) * p2 + lit::<T>(4.0) * p3));
            f2.push(h * (p2 - lit::<T>(2.0) * p3));
            f3.push(h * (-p2 + lit::<T>(4.0) * p3));
        }
        let z = vec![T::zero(); d];
        Self {
            sys: sys.clone(),
            dst: Dst::new(d),
            h,
            e,
            e2,
            q,
            f1,
            f2,
            f3,
            phys: z.clone(),
            react: z.clone(),
            stages: [z.clone(), z.clone(), z.clone(), z.clone()],
            points: [z.clone(), z.clone(), z],
        }
    }

    pub fn step_size(&self) -> T {
        self.h
    }

    /// Spectral coefficients of a physical state.
    pub fn to_spectral(&mut self, x: &[T], v: &mut [T]) {
        self.dst.apply(x, v);
    }

    /// Physical state of spectral coefficients.
    pub fn to_physical(&mut self, v: &[T], x: &mut [T]) {
        self.dst.apply(v, x);
    }

    /// Spectral reaction term `S N(S v, u)` written into `stages[slot]`.
    fn reaction(&mut self, v: &[T], u: &[T], slot: usize) {
        self.dst.apply(v, &mut self.phys);
        self.sys.reaction(&self.phys, u, &mut self.react);
        self.dst.apply(&self.react, &mut self.stages[slot]);
    }

    /// One step of size `h` on spectral coefficients `v`, with the control
    /// evaluated by `u(t, out)`.
    pub fn step(&mut self, v: &mut [T], t: T, u: &mut impl FnMut(T, &mut [T])) {
        let d = v.len();
        let half = self.h * lit(0.5);
        let mut uv = [T::zero(); 2];

        u(t, &mut uv);
        self.reaction(v, &uv, 0);
        for k in 0..d {
            self.points[0][k] = self.e2[k] * v[k] + self.q[k] * self.stages[0][k];
        }
        u(t + half, &mut uv);
        let a = std::mem::take(&mut self.points[0]);
        self.reaction(&a, &uv, 1);
        for k in 0..d {
            self.points[1][k] = self.e2[k] * v[k] + self.q[k] * self.stages[1][k];
        }
        let b = std::mem::take(&mut self.points[1]);
        self.reaction(&b, &uv, 2);
        let two: T = lit(2.0);
        for k in 0..d {
            self.points[2][k] = self.e2[k] * a[k] + self.q[k] * (two * self.stages[2][k] - self.stages[0][k]);
        }
        u(t + self.h, &mut uv);
        let c = std::mem::take(&mut self.points[2]);
        self.reaction(&c, &uv, 3);
        for k in 0..d {
            v[k] = self.e[k] * v[k]
                + self.f1[k] * self.stages[0][k]
                + two * self.f2[k] * (self.stages[1][k] + self.stages[2][k])
                + self.f3[k] * self.stages[3][k];
        }
        self.points = [a, b, c];
    }
}

impl<T: Scalar + FftNum> ReactionDiffusion<T> {
    /// Output trajectory with exponential time differencing, `substeps` steps per grid cell.
    pub fn simulate_output_etd(&self, u: &ControlSignal<T>, substeps: usize) -> Result<Trajectory<T>> {
        self.simulate_etd(u, substeps, true)
    }

    /// State trajectory with exponential time differencing.
    pub fn simulate_states_etd(&self, u: &ControlSignal<T>, substeps: usize) -> Result<Trajectory<T>> {
        self.simulate_etd(u, substeps, false)
    }

    fn simulate_etd(&self, u: &ControlSignal<T>, substeps: usize, outputs: bool) -> Result<Trajectory<T>> {
        if u.inputs() != 2 {
            return Err(Error::shape("control inputs", 2, u.inputs()));
        }
        let grid: TimeGrid<T> = *u.grid();
        let d = self.state_dim();
        let substeps = substeps.max(1);
        let h = grid.step() / from_usize::<T>(substeps);
        let mut stepper = Etdrk4::new(self, h);
        let mut x = self.initial_state().as_slice().to_vec();
        let mut v = vec![T::zero(); d];
        stepper.to_spectral(&x, &mut v);
        let width = if outputs { 1 } else { d };
        let mut values = DMatrix::zeros(grid.len(), width);
        let mut y = [T::zero()];
        let mut record = |j: usize, x: &[T], values: &mut DMatrix<T>| {
            if outputs {
                self.output(x, &mut y);
                values[(j, 0)] = y[0];
            } else {
                values.row_mut(j).copy_from_slice(x);
            }
        };
        record(0, &x, &mut values);
        for cell in 0..grid.len() - 1 {
            let t0 = grid.time(cell);
            let mut eval = |t: T, out: &mut [T]| u.value_in_cell(cell, t, out);
            for s in 0..substeps {
                stepper.step(&mut v, t0 + h * from_usize::<T>(s), &mut eval);
            }
            stepper.to_physical(&v, &mut x);
            guard(&x, cell + 1, grid.time(cell + 1))?;
            record(cell + 1, &x, &mut values);
        }
        Trajectory::new(grid, values)
    }
}
