use super::words::WordIndex;
use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Relative change between successive refinements at which the oracle stops.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

const MAX_LEVEL: usize = 4;
const MAX_INTERVALS: usize = 1 << 24;

/// The iterated integral of `Û` over the word `word` on `[t_0, horizon]`,
/// evaluated by nested composite trapezoid sums.
///
/// Each grid cell of `u` is split into `2^r` panels; `r` grows until two
/// successive results differ by less than [`ORACLE_TOLERANCE`] relative to the
/// iterated integral of `|Û|` along the same word; the last two sums are then
/// Richardson-combined. `horizon` must be a grid point.
pub fn quadrature_oracle_signature<T: Scalar>(u: &ControlSignal<T>, word: &WordIndex, horizon: T) -> Result<T> {
    let level = word.level();
    if level > MAX_LEVEL {
        return Err(Error::InvalidArgument(format!("oracle supports words up to level {MAX_LEVEL}, got {level}")));
    }
    let channels = u.inputs() + 1;
    if let Some(&bad) = word.letters.iter().find(|&&l| l >= channels) {
        return Err(Error::InvalidArgument(format!("letter {bad} outside channel range 0..{channels}")));
    }
    let grid = u.grid();
    let cells = grid
        .index_of(horizon)
        .filter(|&j| j > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("horizon {horizon} is not a positive grid point")))?;
    if level == 0 {
        return Ok(T::one());
    }

    let mut previous = nested_trapezoid(u, &word.letters, cells, 1);
    let mut change = f64::INFINITY;
    let mut refinements = 0;
    let mut panels = 2;
    while cells * panels <= MAX_INTERVALS {
        let current = nested_trapezoid(u, &word.letters, cells, panels);
        let scale = to_f64(current.1).max(f64::MIN_POSITIVE);
        change = to_f64((current.0 - previous.0).abs()) / scale;
        refinements += 1;
        if change < ORACLE_TOLERANCE {
            return Ok(current.0 + (current.0 - previous.0) / lit(3.0));
        }
        previous = current;
        panels *= 2;
    }
    Err(Error::NonConvergence { refinements, change })
}

/// Returns the nested trapezoid value and the same quantity with `|û|`.
fn nested_trapezoid<T: Scalar>(u: &ControlSignal<T>, letters: &[usize], cells: usize, panels: usize) -> (T, T) {
    let grid = u.grid();
    let level = letters.len();
    let h = grid.step() / from_usize::<T>(panels);
    let half = h * lit(0.5);
    // acc[k] holds the level-(k+1) partial integral at the current node.
    let mut acc = [T::zero(); MAX_LEVEL];
    let mut acc_abs = [T::zero(); MAX_LEVEL];
    let mut buf = vec![T::zero(); u.inputs()];
    let mut hat = |cell: usize, t: T, out: &mut [T; MAX_LEVEL]| {
        u.value_in_cell(cell, t, &mut buf);
        for (o, &l) in out.iter_mut().zip(letters) {
            *o = if l == 0 { T::one() } else { buf[l - 1] };
        }
    };
    let mut left = [T::zero(); MAX_LEVEL];
    let mut right = [T::zero(); MAX_LEVEL];
    for cell in 0..cells {
        let t0 = grid.time(cell);
        for p in 0..panels {
            let ta = t0 + h * from_usize::<T>(p);
            hat(cell, ta, &mut left);
            hat(cell, ta + h, &mut right);
            // Update from the innermost level outwards so each level sees the
            // previous level at both panel ends.
            let mut prev_a = T::one();
            let mut prev_abs_a = T::one();
            let mut next = [T::zero(); MAX_LEVEL];
            let mut next_abs = [T::zero(); MAX_LEVEL];
            let mut prev_b = T::one();
            let mut prev_abs_b = T::one();
            for k in 0..level {
                next[k] = acc[k] + half * (prev_a * left[k] + prev_b * right[k]);
                next_abs[k] = acc_abs[k] + half * (prev_abs_a * left[k].abs() + prev_abs_b * right[k].abs());
                prev_a = acc[k];
                prev_abs_a = acc_abs[k];
                prev_b = next[k];
                prev_abs_b = next_abs[k];
            }
            acc = next;
            acc_abs = next_abs;
        }
    }
    (acc[level - 1], acc_abs[level - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    fn grid() -> TimeGrid<f64> {
        TimeGrid::horizon(1.0, 11).unwrap()
    }

    #[test]
    fn time_time_is_half() {
        let u = ControlSignal::test_sinusoid(2, grid()).unwrap();
        let w = WordIndex::new(3, &[0, 0]).unwrap();
        assert!((quadrature_oracle_signature(&u, &w, 1.0).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn constant_input_increment() {
        let u = ControlSignal::from_fn(grid(), 1, |_, o| o[0] = 2.5);
        let w = WordIndex::new(2, &[1]).unwrap();
        let v = quadrature_oracle_signature(&u, &w, 0.6).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn time_then_input_with_linear_control() {
        // ∫_0^1 s * s ds
        let u = ControlSignal::from_fn(grid(), 1, |t, o| o[0] = t);
        let w = WordIndex::new(2, &[0, 1]).unwrap();
        let v = quadrature_oracle_signature(&u, &w, 1.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn rejects_bad_requests() {
        let u = ControlSignal::zero(grid(), 1);
        assert!(quadrature_oracle_signature(&u, &WordIndex::new(2, &[0; 5]).unwrap(), 1.0).is_err());
        assert!(quadrature_oracle_signature(&u, &WordIndex::new(2, &[0]).unwrap(), 0.55).is_err());
        assert!(quadrature_oracle_signature(&u, &WordIndex::new(3, &[2]).unwrap(), 1.0).is_err());
        assert_eq!(quadrature_oracle_signature(&u, &WordIndex::empty(), 1.0).unwrap(), 1.0);
    }
}
