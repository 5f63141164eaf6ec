//! Real scalar types backing complex amplitudes.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point type used for amplitude arithmetic: `f32` or `f64`.
///
/// Tolerances scale with the precision of the type. The `f64` values are the
/// ones every published number in this crate is checked against.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Amplitudes with modulus below this are dropped from sparse states.
    fn prune_tol() -> Self;
    /// Relative tolerance for amplitude and probability comparisons.
    fn eq_tol() -> Self;
    /// Entrywise tolerance for unitarity checks.
    fn unitary_tol() -> Self;

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn prune_tol() -> Self {
        1e-12
    }
    fn eq_tol() -> Self {
        1e-9
    }
    fn unitary_tol() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn prune_tol() -> Self {
        1e-6
    }
    fn eq_tol() -> Self {
        1e-4
    }
    fn unitary_tol() -> Self {
        1e-5
    }
}

/// `exp(2πi·k/d)` for `k` reduced modulo `d`.
///
/// The angle is formed in `f64` from the reduced exponent so that
/// `ω^k` is bit-identical for every `k` in the same residue class.
pub fn root_of_unity<T: Scalar>(d: usize, k: i64) -> Complex<T> {
    let r = k.rem_euclid(d as i64) as f64;
    let theta = 2.0 * std::f64::consts::PI * r / d as f64;
    Complex::new(T::from_f64_lossy(theta.cos()), T::from_f64_lossy(theta.sin()))
}

/// `|a - b| <= rel·max(|a|,|b|) + abs`.
pub fn approx_eq<T: Scalar>(a: Complex<T>, b: Complex<T>, rel: T, abs: T) -> bool {
    let scale = a.norm().max(b.norm());
    (a - b).norm() <= rel * scale + abs
}
