//! Scalar abstraction shared by every kernel.
//!
//! Training runs in `f32`; gradient checks and oracle comparisons run the
//! same code in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar usable by the scan kernels, blocks and model.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn erf(self) -> Self;

    /// `ln(1 + e^x)` without overflow.
    #[inline]
    fn softplus(self) -> Self {
        let zero = Self::zero();
        self.max(zero) + (-self.abs()).exp().ln_1p()
    }

    #[inline]
    fn sigmoid(self) -> Self {
        let one = Self::one();
        if self >= Self::zero() {
            one / (one + (-self).exp())
        } else {
            let e = self.exp();
            e / (one + e)
        }
    }

    /// Standard normal CDF.
    #[inline]
    fn normal_cdf(self) -> Self {
        Self::lit(0.5) * (Self::one() + (self * Self::lit(std::f64::consts::FRAC_1_SQRT_2)).erf())
    }

    /// Standard normal density.
    #[inline]
    fn normal_pdf(self) -> Self {
        let inv_sqrt_2pi = Self::lit(0.398_942_280_401_432_7);
        inv_sqrt_2pi * (Self::lit(-0.5) * self * self).exp()
    }
}

impl Real for f32 {
    #[inline]
    fn erf(self) -> Self {
        libm::erff(self)
    }
}

impl Real for f64 {
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
}

/// Converts between two real scalar types through `f64`.
#[inline]
pub fn cast<A: Real, B: Real>(x: A) -> B {
    B::lit(x.to_f64().expect("finite scalar"))
}
