//! Scalar abstraction shared by every numerical module.

use nalgebra as na;
use num_traits as nt;
use std::fmt::{Debug, Display};

/// Real floating-point scalar usable by the simulator (`f32` or `f64`).
///
/// Everything numerical in the crate is written against this trait so the
/// same code runs in single or double precision. Tolerances that depend on
/// machine precision go through [`Real::tol`].
pub trait Real:
    Copy
    + na::RealField
    + na::Scalar
    + nt::FloatConst
    + nt::FromPrimitive
    + nt::ToPrimitive
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Literal conversion from `f64`.
    fn lit(x: f64) -> Self;

    /// Lossy conversion back to `f64` for diagnostics and error payloads.
    fn f64(self) -> f64;

    fn usize(n: usize) -> Self {
        Self::lit(n as f64)
    }

    /// `max(requested, floor·ε)`: a requested tolerance clamped to what the
    /// precision can deliver.
    fn tol(requested: f64, floor: f64) -> Self {
        Self::lit(requested.max(floor * Self::epsilon_f64()))
    }

    fn epsilon_f64() -> f64;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn f64(self) -> f64 {
        self
    }
    fn epsilon_f64() -> f64 {
        f64::EPSILON
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn f64(self) -> f64 {
        self as f64
    }
    fn epsilon_f64() -> f64 {
        f32::EPSILON as f64
    }
}

/// Largest absolute entry of a matrix.
pub fn max_abs<T: Real, R: na::Dim, C: na::Dim, S: na::RawStorage<T, R, C>>(m: &na::Matrix<T, R, C, S>) -> T {
    m.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

/// |z|.
pub fn cabs<T: Real>(z: num_complex::Complex<T>) -> T {
    z.re.hypot(z.im)
}

/// arg z in (−π, π].
pub fn carg<T: Real>(z: num_complex::Complex<T>) -> T {
    z.im.atan2(z.re)
}

/// r e^{iφ}.
pub fn polar<T: Real>(r: T, phi: T) -> num_complex::Complex<T> {
    num_complex::Complex::new(r * phi.cos(), r * phi.sin())
}
