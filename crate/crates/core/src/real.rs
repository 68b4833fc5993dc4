//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar the solvers are generic over (`f32`, `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("integer not representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

// Above this argument the exponential forms below are used so that
// sinh/cosh never overflow and ratios keep full relative precision.
const HYPERBOLIC_SWITCH: f64 = 20.0;

/// `sinh(s·x) / sinh(s)` for `s > 0`, `x ∈ [0, 1]`.
pub fn sinh_ratio<T: Real>(s: T, x: T) -> T {
    if s <= T::lit(HYPERBOLIC_SWITCH) {
        (s * x).sinh() / s.sinh()
    } else {
        let two = T::lit(2.0);
        (-(s * (T::one() - x))).exp() * (T::one() - (-two * s * x).exp())
            / (T::one() - (-two * s).exp())
    }
}

/// `cosh(s·x) / sinh(s)` for `s > 0`, `x ∈ [0, 1]`.
pub fn cosh_ratio<T: Real>(s: T, x: T) -> T {
    if s <= T::lit(HYPERBOLIC_SWITCH) {
        (s * x).cosh() / s.sinh()
    } else {
        let two = T::lit(2.0);
        (-(s * (T::one() - x))).exp() * (T::one() + (-two * s * x).exp())
            / (T::one() - (-two * s).exp())
    }
}

#[inline]
pub fn coth<T: Real>(s: T) -> T {
    T::one() / s.tanh()
}

/// `s / sinh(s)`, which underflows gracefully to zero.
#[inline]
pub fn s_over_sinh<T: Real>(s: T) -> T {
    if s <= T::lit(HYPERBOLIC_SWITCH) {
        s / s.sinh()
    } else {
        T::lit(2.0) * s * (-s).exp() / (T::one() - (-T::lit(2.0) * s).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_match_direct_formulas_on_both_branches() {
        for &s in &[0.5_f64, 3.0, 19.0, 21.0, 45.0] {
            for &x in &[0.0, 0.25, 0.5, 0.9, 1.0] {
                let direct_s = (s * x).sinh() / s.sinh();
                let direct_c = (s * x).cosh() / s.sinh();
                assert!((sinh_ratio(s, x) - direct_s).abs() <= 1e-13 * direct_s.abs().max(1e-300));
                assert!((cosh_ratio(s, x) - direct_c).abs() <= 1e-13 * direct_c.abs());
            }
            assert!((s_over_sinh(s) - s / s.sinh()).abs() <= 1e-13 * (s / s.sinh()));
        }
    }

    #[test]
    fn ratios_survive_large_arguments() {
        let s = 900.0_f64;
        assert_eq!(sinh_ratio(s, 1.0), 1.0);
        assert!(cosh_ratio(s, 1.0) > 0.999);
        assert_eq!(s_over_sinh(s), 0.0);
        assert!(sinh_ratio(1000.0_f32, 0.5) >= 0.0);
    }
}
