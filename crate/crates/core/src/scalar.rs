//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the solvers are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or parameter.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically stable `log Σ exp(x_i)`, summed in index order.
///
/// Returns `-inf` for an empty family or when every term is `-inf`.
#[inline]
pub fn log_sum_exp<T: Scalar>(len: usize, mut term: impl FnMut(usize) -> T) -> T {
    let mut max = T::neg_infinity();
    for i in 0..len {
        let t = term(i);
        if t > max {
            max = t;
        }
    }
    if !max.is_finite() {
        return max;
    }
    let mut acc = T::zero();
    for i in 0..len {
        acc = acc + (term(i) - max).exp();
    }
    max + acc.ln()
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive_on_small_values() {
        let xs = [0.1f64, -2.0, 1.5];
        let naive: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        let stable = log_sum_exp(xs.len(), |i| xs[i]);
        assert!((naive - stable).abs() < 1e-14);
    }

    #[test]
    fn lse_survives_large_negative_terms() {
        let xs = [-1000.0f64, -1000.0];
        let v = log_sum_exp(2, |i| xs[i]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp::<f64>(0, |_| 0.0), f64::NEG_INFINITY);
    }
}
