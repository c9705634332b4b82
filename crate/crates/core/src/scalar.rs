//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar the inference routines are generic over: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance used when a simplex-valued object is constructed.
    fn construct_tol() -> Self;
    /// Looser tolerance for checks made after further arithmetic.
    fn check_tol() -> Self;

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Real for f64 {
    fn construct_tol() -> Self {
        1e-12
    }
    fn check_tol() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn construct_tol() -> Self {
        1e-5
    }
    fn check_tol() -> Self {
        1e-4
    }
}

/// Neumaier compensated sum.
pub fn stable_sum<F: Real>(xs: impl IntoIterator<Item = F>) -> F {
    let mut sum = F::zero();
    let mut comp = F::zero();
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp = comp + ((sum - t) + x);
        } else {
            comp = comp + ((x - t) + sum);
        }
        sum = t;
    }
    sum + comp
}
