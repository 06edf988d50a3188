use nalgebra::DVector;

use super::compute::SignatureVector;
use super::words::level_offset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Truncated tensor product `Sa ⊗ Sb`: the signature over `[a, c]` from the
/// signatures over `[a, b]` and `[b, c]`.
pub fn chen_concatenate<T: Scalar>(sa: &SignatureVector<T>, sb: &SignatureVector<T>) -> Result<SignatureVector<T>> {
    if sa.channels() != sb.channels() || sa.order() != sb.order() {
        return Err(Error::shape(
            "signature concatenation",
            format!("channels {} order {}", sa.channels(), sa.order()),
            format!("channels {} order {}", sb.channels(), sb.order()),
        ));
    }
    let channels = sa.channels();
    let order = sa.order();
    let mut out = DVector::zeros(sa.len());
    for k in 0..=order {
        let base = level_offset(channels, k);
        for j in 0..=k {
            let left = sa.level(j);
            let right = sb.level(k - j);
            for (a, &x) in left.iter().enumerate() {
                if x == T::zero() {
                    continue;
                }
                let row = base + a * right.len();
                for (b, &y) in right.iter().enumerate() {
                    out[row + b] += x * y;
                }
            }
        }
    }
    SignatureVector::new(channels, order, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_is_identity() {
        let data = DVector::from_iterator(7, (0..7).map(|i| if i == 0 { 1.0 } else { i as f64 * 0.3 }));
        let sb = SignatureVector::new(2, 2, data).unwrap();
        let e = SignatureVector::trivial(2, 2).unwrap();
        assert_eq!(chen_concatenate(&e, &sb).unwrap(), sb);
        assert_eq!(chen_concatenate(&sb, &e).unwrap(), sb);
    }

    #[test]
    fn pure_time_binomial() {
        let (a, b) = (0.3_f64, 0.5_f64);
        let order = 5;
        let fact = |k: usize| (1..=k).product::<usize>() as f64;
        let pure = |s: f64| {
            SignatureVector::new(1, order, DVector::from_iterator(order + 1, (0..=order).map(|k| s.powi(k as i32) / fact(k))))
                .unwrap()
        };
        let c = chen_concatenate(&pure(a), &pure(b)).unwrap();
        for k in 0..=order {
            assert!((c.level(k)[0] - (a + b).powi(k as i32) / fact(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_mismatch() {
        let a = SignatureVector::<f64>::trivial(2, 2).unwrap();
        let b = SignatureVector::<f64>::trivial(2, 3).unwrap();
        assert!(chen_concatenate(&a, &b).is_err());
    }
}
