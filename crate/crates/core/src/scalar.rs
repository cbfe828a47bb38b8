//! Scalar abstraction shared by every numerical module.
//!
//! All physics is written against [`Real`], which is implemented for `f32`
//! and `f64`. Tolerances quoted throughout the tests assume `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point type usable by the simulator.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

/// `ln(n!)` for `n = 0..=n_max`, accumulated term by term.
pub fn ln_factorials<T: Real>(n_max: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0f64;
    out.push(T::zero());
    for k in 1..=n_max {
        acc += (k as f64).ln();
        out.push(T::lit(acc));
    }
    out
}

/// `ln Σ exp(x_i)` without overflow. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<T: Real>(xs: impl IntoIterator<Item = T> + Clone) -> T {
    let max = xs
        .clone()
        .into_iter()
        .fold(T::neg_infinity(), |a, b| a.max(b));
    if !max.is_finite() {
        return max;
    }
    let s: T = xs.into_iter().map(|x| (x - max).exp()).sum();
    max + s.ln()
}
