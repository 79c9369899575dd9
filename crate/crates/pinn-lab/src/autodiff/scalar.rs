//! The scalar abstraction underneath jets and tapes.
//!
//! Network forward passes, hard-constraint wrappers and residual operators
//! are written once, generically over [`Scalar`]. Instantiated with `f64`
//! they evaluate plainly; instantiated with [`crate::autodiff::Var`] the same
//! code records onto a reverse tape and becomes differentiable w.r.t. the
//! parameters.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A differentiable scalar: plain floats or tape variables.
///
/// The primitive set matches what losses are composed of:
/// `+ − × ÷ neg tanh sigmoid sin cos exp powi`.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(c: f64) -> Self;
    /// Primal value.
    fn value(self) -> f64;

    fn tanh(self) -> Self;
    fn sigmoid(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

macro_rules! impl_scalar_for_float {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn from_f64(c: f64) -> Self {
                c as $t
            }
            #[inline]
            fn value(self) -> f64 {
                self as f64
            }
            #[inline]
            fn tanh(self) -> Self {
                num_traits::Float::tanh(self)
            }
            #[inline]
            fn sigmoid(self) -> Self {
                let one: $t = 1.0;
                one / (one + num_traits::Float::exp(-self))
            }
            #[inline]
            fn sin(self) -> Self {
                num_traits::Float::sin(self)
            }
            #[inline]
            fn cos(self) -> Self {
                num_traits::Float::cos(self)
            }
            #[inline]
            fn exp(self) -> Self {
                num_traits::Float::exp(self)
            }
            #[inline]
            fn powi(self, n: i32) -> Self {
                num_traits::Float::powi(self, n)
            }
        }
    };
}

impl_scalar_for_float!(f32);
impl_scalar_for_float!(f64);
