//! Bilinear control systems `S' = A_0 S + Σ A_i S u_i`, `S(0) = S_0 v`, `y = C S`.

use nalgebra::{DMatrix, DVector};

use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::integrate::integrate_on_grid;
use crate::scalar::{lit, to_f64, Scalar};
use crate::signature::UnitPattern;
use crate::trajectory::Trajectory;

/// Residual bound on `‖T T_inv − I‖_max` accepted by [`BilinearSystem::transform`].
pub const TRANSFORM_TOLERANCE: f64 = 1e-10;

/// One coefficient matrix: sparse unit pattern for signature systems, dense otherwise.
#[derive(Clone, Debug)]
pub enum Generator<T: Scalar> {
    Sparse(UnitPattern),
    Dense(DMatrix<T>),
}

impl<T: Scalar> Generator<T> {
    pub fn dim(&self) -> usize {
        match self {
            Generator::Sparse(p) => p.dim(),
            Generator::Dense(m) => m.nrows(),
        }
    }

    /// `y += scale * A x`.
    #[inline]
    pub fn mul_vec_add(&self, x: &[T], scale: T, y: &mut [T]) {
        match self {
            Generator::Sparse(p) => p.mul_vec_add(x, scale, y),
            Generator::Dense(m) => {
                let n = m.nrows();
                for (c, &xc) in x.iter().enumerate() {
                    let s = scale * xc;
                    if s == T::zero() {
                        continue;
                    }
                    let col = &m.as_slice()[c * n..(c + 1) * n];
                    for (yr, &a) in y.iter_mut().zip(col) {
                        *yr += a * s;
                    }
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        match self {
            Generator::Sparse(p) => p.to_dense(),
            Generator::Dense(m) => m.clone(),
        }
    }

    /// `A X`.
    pub fn left_mul(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            Generator::Sparse(p) => {
                let mut out = DMatrix::zeros(p.dim(), x.ncols());
                for &(r, c) in p.entries() {
                    let src = x.row(c).into_owned();
                    let mut dst = out.row_mut(r);
                    dst += src;
                }
                out
            }
            Generator::Dense(m) => m * x,
        }
    }

    /// `Aᵀ X`.
    pub fn left_mul_transpose(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            Generator::Sparse(p) => {
                let mut out = DMatrix::zeros(p.dim(), x.ncols());
                for &(r, c) in p.entries() {
                    let src = x.row(r).into_owned();
                    let mut dst = out.row_mut(c);
                    dst += src;
                }
                out
            }
            Generator::Dense(m) => m.tr_mul(x),
        }
    }

    /// `A X Aᵀ`.
    pub fn sandwich(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            Generator::Sparse(p) => {
                let mut out = DMatrix::zeros(p.dim(), p.dim());
                for &(r1, c1) in p.entries() {
                    for &(r2, c2) in p.entries() {
                        out[(r1, r2)] += x[(c1, c2)];
                    }
                }
                out
            }
            Generator::Dense(m) => m * x * m.transpose(),
        }
    }

    /// `Aᵀ X A`.
    pub fn sandwich_transpose(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            Generator::Sparse(p) => {
                let mut out = DMatrix::zeros(p.dim(), p.dim());
                for &(r1, c1) in p.entries() {
                    for &(r2, c2) in p.entries() {
                        out[(c1, c2)] += x[(r1, r2)];
                    }
                }
                out
            }
            Generator::Dense(m) => m.tr_mul(x) * m,
        }
    }
}

/// State-space bilinear system with an initial subspace `S_0` and coefficient `v`.
#[derive(Clone, Debug)]
pub struct BilinearSystem<T: Scalar> {
    generators: Vec<Generator<T>>,
    s0: DMatrix<T>,
    v: DVector<T>,
    c: Option<DMatrix<T>>,
}

impl<T: Scalar> BilinearSystem<T> {
    /// `generators[0]` is the drift `A_0`; `generators[i]` multiplies input `u_i`.
    pub fn new(generators: Vec<Generator<T>>, s0: DMatrix<T>, v: DVector<T>, c: Option<DMatrix<T>>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::InvalidArgument("bilinear system needs at least the drift matrix".into()));
        };
        let n = first.dim();
        for g in &generators {
            if let Generator::Dense(m) = g {
                if !m.is_square() {
                    return Err(Error::shape("generator", "square matrix", format!("{}x{}", m.nrows(), m.ncols())));
                }
            }
            if g.dim() != n {
                return Err(Error::shape("generator dimension", n, g.dim()));
            }
        }
        if s0.nrows() != n {
            return Err(Error::shape("initial subspace rows", n, s0.nrows()));
        }
        if s0.ncols() != v.len() {
            return Err(Error::shape("initial coefficient length", s0.ncols(), v.len()));
        }
        if let Some(c) = &c {
            if c.ncols() != n {
                return Err(Error::shape("output matrix columns", n, c.ncols()));
            }
        }
        Ok(Self { generators, s0, v, c })
    }

    /// Single initial state: `S_0 = x0`, `v = 1`.
    pub fn with_initial_state(generators: Vec<Generator<T>>, x0: DVector<T>, c: Option<DMatrix<T>>) -> Result<Self> {
        let s0 = DMatrix::from_column_slice(x0.len(), 1, x0.as_slice());
        Self::new(generators, s0, DVector::from_element(1, T::one()), c)
    }

    pub fn dim(&self) -> usize {
        self.s0.nrows()
    }

    /// Number of control inputs `m`.
    pub fn inputs(&self) -> usize {
        self.generators.len() - 1
    }

    pub fn generators(&self) -> &[Generator<T>] {
        &self.generators
    }

    pub fn initial_subspace(&self) -> &DMatrix<T> {
        &self.s0
    }

    pub fn initial_coefficients(&self) -> &DVector<T> {
        &self.v
    }

    pub fn initial_state(&self) -> DVector<T> {
        &self.s0 * &self.v
    }

    pub fn output_matrix(&self) -> Option<&DMatrix<T>> {
        self.c.as_ref()
    }

    pub fn outputs(&self) -> Option<usize> {
        self.c.as_ref().map(|c| c.nrows())
    }

    pub fn set_output_matrix(&mut self, c: DMatrix<T>) -> Result<()> {
        if c.ncols() != self.dim() {
            return Err(Error::shape("output matrix columns", self.dim(), c.ncols()));
        }
        self.c = Some(c);
        Ok(())
    }

    pub fn with_output_matrix(mut self, c: DMatrix<T>) -> Result<Self> {
        self.set_output_matrix(c)?;
        Ok(self)
    }

    /// State trajectory from `S_0 v` on `grid`, one RK4 step per grid cell.
    pub fn simulate(&self, u: &ControlSignal<T>, grid: &TimeGrid<T>) -> Result<Trajectory<T>> {
        self.simulate_with(u, grid, 1)
    }

    pub fn simulate_with(&self, u: &ControlSignal<T>, grid: &TimeGrid<T>, substeps: usize) -> Result<Trajectory<T>> {
        if !u.grid().same_as(grid) {
            return Err(Error::shape("control sampling grid", grid.len(), u.grid().len()));
        }
        self.simulate_from(&self.initial_state(), u, 0, substeps)
    }

    /// State trajectory started from `x0` at grid index `start` of the control's
    /// grid and run to its end. The result lives on the tail grid.
    pub fn simulate_from(&self, x0: &DVector<T>, u: &ControlSignal<T>, start: usize, substeps: usize) -> Result<Trajectory<T>> {
        if u.inputs() != self.inputs() {
            return Err(Error::shape("control inputs", self.inputs(), u.inputs()));
        }
        if x0.len() != self.dim() {
            return Err(Error::shape("initial state length", self.dim(), x0.len()));
        }
        let grid = u.grid().tail(start)?;
        let mut state = x0.as_slice().to_vec();
        let mut buf = vec![T::zero(); self.inputs()];
        let mut values = DMatrix::zeros(grid.len(), self.dim());
        integrate_on_grid(
            &grid,
            &mut state,
            substeps,
            |cell, t, x, dx| {
                dx.fill(T::zero());
                self.generators[0].mul_vec_add(x, T::one(), dx);
                u.value_in_cell(cell + start, t, &mut buf);
                for (g, &ui) in self.generators[1..].iter().zip(&buf) {
                    if ui != T::zero() {
                        g.mul_vec_add(x, ui, dx);
                    }
                }
            },
            |j, x| values.row_mut(j).copy_from_slice(x),
        )?;
        Trajectory::new(grid, values)
    }

    /// `y = C S` applied row-wise to a state trajectory.
    pub fn output(&self, states: &Trajectory<T>) -> Result<Trajectory<T>> {
        let c = self.c.as_ref().ok_or(Error::Unlearned)?;
        if states.dim() != self.dim() {
            return Err(Error::shape("state trajectory width", self.dim(), states.dim()));
        }
        Trajectory::new(*states.grid(), states.values() * c.transpose())
    }

    /// Output trajectory for control `u` on its own grid.
    pub fn simulate_output(&self, u: &ControlSignal<T>, substeps: usize) -> Result<Trajectory<T>> {
        let states = self.simulate_with(u, u.grid(), substeps)?;
        self.output(&states)
    }

    /// The equivalent system in coordinates `S_b = T S`.
    pub fn transform(&self, t_mat: &DMatrix<T>, t_inv: &DMatrix<T>) -> Result<Self> {
        let n = self.dim();
        if t_mat.shape() != (n, n) || t_inv.shape() != (n, n) {
            return Err(Error::shape(
                "transformation",
                format!("{n}x{n}"),
                format!("{:?} and {:?}", t_mat.shape(), t_inv.shape()),
            ));
        }
        let residual = (t_mat * t_inv - DMatrix::<T>::identity(n, n)).amax();
        if !(residual <= lit(TRANSFORM_TOLERANCE)) {
            return Err(Error::IllConditioned { residual: to_f64(residual), tolerance: TRANSFORM_TOLERANCE });
        }
        Ok(self.project(t_mat, t_inv))
    }

    /// Petrov–Galerkin projection `A_i ← W A_i V`, `S_0 ← W S_0`, `C ← C V` with
    /// `W` (k×n) and `V` (n×k); no invertibility check.
    pub fn project(&self, w: &DMatrix<T>, v: &DMatrix<T>) -> Self {
        let generators = self
            .generators
            .iter()
            .map(|g| {
                let av = g.left_mul(v);
                Generator::Dense(w * av)
            })
            .collect();
        Self {
            generators,
            s0: w * &self.s0,
            v: self.v.clone(),
            c: self.c.as_ref().map(|c| c * v),
        }
    }
}
