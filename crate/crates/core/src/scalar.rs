//! Numeric scalar abstraction.
//!
//! Every probability, regret, value and baseline in the crate is generic over
//! [`Scalar`], so the solvers run unchanged on `f32` or `f64`. Chip payoffs are
//! integers in the rule engine and are lifted into the scalar type at the
//! boundary.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the solvers compute in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Exact conversion of an integer count or chip amount.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn from_chips(c: i32) -> Self {
        Self::from_i32(c).expect("chip amount representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
}

/// Uniform distribution of length `n`.
pub fn uniform<S: Scalar>(n: usize) -> Vec<S> {
    assert!(n > 0, "uniform distribution over an empty set");
    vec![S::one() / S::from_count(n); n]
}

/// Dot product of two equal-length slices.
#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_sums_to_one_in_both_precisions() {
        let a: Vec<f64> = uniform(3);
        let b: Vec<f32> = uniform(4);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((b.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn chip_conversion_is_exact() {
        assert_eq!(f32::from_chips(-13), -13.0);
        assert_eq!(f64::from_count(464), 464.0);
    }
}
