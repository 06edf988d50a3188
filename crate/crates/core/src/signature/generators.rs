use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_traits::Num;

use super::words::{level_offset, signature_dimension};
use crate::bilinear::{BilinearSystem, Generator};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square 0/1 matrix stored as `(row, col)` coordinates with implicit unit values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitPattern {
    dim: usize,
    entries: Vec<(usize, usize)>,
}

impl UnitPattern {
    pub fn new(dim: usize, entries: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(r, c)) = entries.iter().find(|&&(r, c)| r >= dim || c >= dim) {
            return Err(Error::InvalidArgument(format!("entry ({r}, {c}) outside {dim}x{dim}")));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `y += scale * A x`.
    #[inline]
    pub fn mul_vec_add<T: Scalar>(&self, x: &[T], scale: T, y: &mut [T]) {
        for &(r, c) in &self.entries {
            y[r] += scale * x[c];
        }
    }

    pub fn to_dense<T: Scalar>(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c) in &self.entries {
            m[(r, c)] += T::one();
        }
        m
    }

    /// Exact copy with entries in an arbitrary numeric type.
    pub fn to_sparse<T: Num + Clone>(&self) -> SparseMatrix<T> {
        let mut out = SparseMatrix::zeros(self.dim);
        for &(r, c) in &self.entries {
            out.add_at(r, c, T::one());
        }
        out
    }
}

/// The signature generator matrices `A_0, ..., A_{channels-1}`.
///
/// `A_i` maps every word `w` of level `k < order` to the word `w·i`: it carries a
/// single unit entry at `(offset(w·i), offset(w))`. Row 0 and every column of a
/// top-level word stay empty.
pub fn build_generator_matrices(channels: usize, order: usize) -> Result<Vec<UnitPattern>> {
    if order == 0 {
        return Err(Error::InvalidArgument("generator matrices need order >= 1".into()));
    }
    let n = signature_dimension(channels, order)?;
    let mut out = Vec::with_capacity(channels);
    for letter in 0..channels {
        let mut entries = Vec::with_capacity(signature_dimension(channels, order - 1)?);
        let mut words_at_level = 1;
        for level in 0..order {
            let from = level_offset(channels, level);
            let to = level_offset(channels, level + 1);
            for w in 0..words_at_level {
                entries.push((to + w * channels + letter, from + w));
            }
            words_at_level *= channels;
        }
        out.push(UnitPattern { dim: n, entries });
    }
    Ok(out)
}

/// Sparse square matrix over any exact or floating numeric type.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    dim: usize,
    entries: BTreeMap<(usize, usize), T>,
}

impl<T: Num + Clone> SparseMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: BTreeMap::new() }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.add_at(i, i, T::one());
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(T::zero)
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: T) {
        let slot = self.entries.entry((r, c)).or_insert_with(T::zero);
        *slot = slot.clone() + v;
        if slot.is_zero() {
            self.entries.remove(&(r, c));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut by_row: BTreeMap<usize, Vec<(usize, T)>> = BTreeMap::new();
        for ((r, c), v) in &rhs.entries {
            by_row.entry(*r).or_default().push((*c, v.clone()));
        }
        let mut out = Self::zeros(self.dim);
        for ((r, k), a) in &self.entries {
            if let Some(row) = by_row.get(k) {
                for (c, b) in row {
                    out.add_at(*r, *c, a.clone() * b.clone());
                }
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = Self::zeros(self.dim);
        for ((r, c), v) in &self.entries {
            out.add_at(*r, *c, v.clone() * s.clone());
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for ((r, c), v) in &rhs.entries {
            out.add_at(*r, *c, v.clone());
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim];
        for ((r, c), v) in &self.entries {
            y[*r] = y[*r].clone() + v.clone() * x[*c].clone();
        }
        y
    }
}

/// `exp(t A) = Σ_{k=0}^{order} (tA)^k / k!` for `A` nilpotent of index `order + 1`.
///
/// The finite sum is exact in any field, so rational arithmetic yields the exact
/// propagator.
pub fn nilpotent_exponential<T: Num + Clone>(a: &SparseMatrix<T>, t: T, order: usize) -> SparseMatrix<T> {
    let mut total = SparseMatrix::identity(a.dim());
    let mut term = SparseMatrix::identity(a.dim());
    let mut k = T::zero();
    for _ in 0..order {
        k = k + T::one();
        term = a.mul(&term).scale(t.clone() / k.clone());
        total = total.add(&term);
    }
    total
}

/// The universal bilinear system solved by the truncated signature of `Û`.
#[derive(Clone, Debug)]
pub struct SignatureSystem<T: Scalar> {
    channels: usize,
    order: usize,
    generators: Vec<UnitPattern>,
    initial: DVector<T>,
    output: Option<DMatrix<T>>,
}

impl<T: Scalar> SignatureSystem<T> {
    /// Signature system with `channels` channels (time plus inputs) truncated at `order`.
    pub fn new(channels: usize, order: usize) -> Result<Self> {
        let generators = build_generator_matrices(channels, order)?;
        let n = generators[0].dim();
        let mut initial = DVector::zeros(n);
        initial[0] = T::one();
        Ok(Self { channels, order, generators, initial, output: None })
    }

    /// Signature system for `inputs` control channels.
    pub fn for_inputs(inputs: usize, order: usize) -> Result<Self> {
        Self::new(inputs + 1, order)
    }

    pub fn with_output(mut self, c: DMatrix<T>) -> Result<Self> {
        self.set_output(c)?;
        Ok(self)
    }

    pub fn set_output(&mut self, c: DMatrix<T>) -> Result<()> {
        if c.ncols() != self.dim() {
            return Err(Error::shape("output matrix columns", self.dim(), c.ncols()));
        }
        self.output = Some(c);
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn inputs(&self) -> usize {
        self.channels - 1
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `n = Σ_{k<=N} channels^k`.
    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    /// `ñ = Σ_{k<N} channels^k`, the number of unit entries per generator.
    pub fn active_dim(&self) -> usize {
        self.generators[0].nnz()
    }

    pub fn generators(&self) -> &[UnitPattern] {
        &self.generators
    }

    pub fn initial_state(&self) -> &DVector<T> {
        &self.initial
    }

    pub fn output(&self) -> Option<&DMatrix<T>> {
        self.output.as_ref()
    }

    /// The same dynamics as a [`BilinearSystem`] with sparse generators.
    pub fn to_bilinear(&self) -> BilinearSystem<T> {
        let generators = self.generators.iter().cloned().map(Generator::Sparse).collect();
        let s0 = DMatrix::from_column_slice(self.dim(), 1, self.initial.as_slice());
        let v = DVector::from_element(1, T::one());
        BilinearSystem::new(generators, s0, v, self.output.clone())
            .expect("signature system shapes are consistent")
    }
}
