//! Scalar abstraction.
//!
//! Every numerical routine in the crate is generic over [`Real`], which is
//! implemented for `f32` and `f64`. Tolerances quoted in the documentation
//! assume `f64`; `f32` works with proportionally looser thresholds.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftPlanner;

/// Floating-point scalar usable by the geometry kernel.
pub trait Real:
    Float + FloatConst + FromPrimitive + Default + Debug + Display + LowerExp + Sum + Send + Sync + 'static
{
    /// In-place batched FFT: `buf` holds `buf.len() / len` contiguous lanes
    /// of length `len`. The inverse transform is unnormalized.
    fn fft_lanes(buf: &mut [Complex<Self>], len: usize, inverse: bool);

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 value representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite scalar")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn of_i64(n: i64) -> Self {
        <Self as FromPrimitive>::from_i64(n).expect("i64 representable")
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn fft_lanes(buf: &mut [Complex<$t>], len: usize, inverse: bool) {
                if buf.is_empty() {
                    return;
                }
                let mut planner = FftPlanner::<$t>::new();
                let plan = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
                plan.process(buf);
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Minimal representative of `d` modulo `period`, in `[-period/2, period/2]`.
#[inline]
pub fn min_rep<T: Real>(d: T, period: T) -> T {
    d - period * (d / period).round()
}

/// Reduces `x` into `[0, period)`.
#[inline]
pub fn reduce<T: Real>(x: T, period: T) -> T {
    let mut r = x - period * (x / period).floor();
    if r >= period {
        r = r - period;
    }
    if r < T::zero() {
        r = T::zero();
    }
    r
}

/// Euclidean norm.
#[inline]
pub fn norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}
