//! Scalar abstraction: the whole library is generic over the floating-point
//! type through [`Real`], with `f64` as the default precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the exact-evaluation machinery.
///
/// Tolerances differ per type: the `f64` values are the ones the library's
/// contracts are stated in; the `f32` values are scaled to what single
/// precision can actually deliver.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Tolerance for normalization checks (row sums, distributions).
    fn check_eps() -> Self;

    /// Relative residual tolerance for linear solves.
    fn solve_eps() -> Self;

    /// Relative cutoff for discarding near-zero eigenvalues in pseudo-inverses.
    fn pinv_rcond() -> Self;

    /// Converts an `f64` constant; panics only for values unrepresentable in
    /// the target type (never for the finite constants used here).
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Lossy view as `f64` for reporting and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn check_eps() -> Self {
        1e-12
    }
    fn solve_eps() -> Self {
        1e-10
    }
    fn pinv_rcond() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn check_eps() -> Self {
        1e-5
    }
    fn solve_eps() -> Self {
        1e-4
    }
    fn pinv_rcond() -> Self {
        1e-6
    }
}
