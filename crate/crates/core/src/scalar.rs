//! Floating point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type the ensemble, map and network code is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossless for `f64`, rounding for `f32`.
    fn of(v: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

const LANES: usize = 8;

/// Squared Euclidean distance with a fixed eight-lane summation order.
///
/// The lane layout lets the compiler vectorize the loop while keeping the
/// result independent of how callers split work across threads.
#[inline]
pub fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for l in 0..LANES {
            let d = xa[l] - xb[l];
            acc[l] = acc[l] + d * d;
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x - y;
        tail = tail + d * d;
    }
    combine(&acc) + tail
}

/// [`sq_dist`], abandoned early once a partial sum exceeds `bound`.
///
/// Returns `None` only when the full distance is certainly greater than
/// `bound`; otherwise returns exactly the value of [`sq_dist`]. Partial lane
/// sums never decrease, so pruning cannot change which candidate wins.
#[inline]
pub(crate) fn sq_dist_bounded<T: Scalar>(a: &[T], b: &[T], bound: T) -> Option<T> {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    let mut k = 0;
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for l in 0..LANES {
            let d = xa[l] - xb[l];
            acc[l] = acc[l] + d * d;
        }
        k += 1;
        if k % 4 == 0 && combine(&acc) > bound {
            return None;
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x - y;
        tail = tail + d * d;
    }
    Some(combine(&acc) + tail)
}

#[inline]
fn combine<T: Scalar>(acc: &[T; LANES]) -> T {
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

#[inline]
pub fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    sq_dist(a, b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_distance_is_exact_or_certainly_larger() {
        let a: Vec<f64> = (0..70).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..70).map(|i| (i as f64 * 0.3).cos()).collect();
        let full = sq_dist(&a, &b);
        for bound in [0.0, full * 0.25, full * 0.999, full, full * 2.0] {
            match sq_dist_bounded(&a, &b, bound) {
                Some(d) => assert_eq!(d, full),
                None => assert!(full > bound),
            }
        }
        assert_eq!(sq_dist_bounded(&a, &b, full), Some(full));
    }

    #[test]
    fn sq_dist_matches_naive_sum() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..37).map(|i| (i as f64 * 0.11).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        assert!((sq_dist(&a, &b) - naive).abs() < 1e-12);
        assert_eq!(sq_dist(&a, &a), 0.0);
    }

    #[test]
    fn f32_and_f64_agree_on_small_integers() {
        let a = [1.0f32, 2.0, 3.0];
        let b = [4.0f32, 6.0, 3.0];
        assert_eq!(sq_dist(&a, &b), 25.0);
        assert_eq!(dist(&[1.0f64, 2.0, 3.0], &[4.0, 6.0, 3.0]), 5.0);
    }
}
