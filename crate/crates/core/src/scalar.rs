//! Numeric scalar abstraction shared by every computation in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
///
/// Tolerances are per-type because the single precision build cannot resolve
/// the `1e-9` slack used for `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Slack on defining inequalities (lattice checks, polytope membership).
    const CHECK_TOL: Self;
    /// Pivot and reduced-cost threshold of the simplex.
    const PIVOT_TOL: Self;
    /// Feasibility slack on scaled relaxation rows.
    const CERTIFY_TOL: Self;
    /// Slack on probability normalization.
    const PROB_TOL: Self;

    /// Converts an `f64` literal; panics only on non-representable values,
    /// which cannot happen for finite inputs.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to scalar")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize converts to scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    const CHECK_TOL: Self = 1e-9;
    const PIVOT_TOL: Self = 1e-10;
    const CERTIFY_TOL: Self = 1e-7;
    const PROB_TOL: Self = 1e-12;
}

impl Scalar for f32 {
    const CHECK_TOL: Self = 1e-4;
    const PIVOT_TOL: Self = 1e-6;
    const CERTIFY_TOL: Self = 1e-4;
    const PROB_TOL: Self = 1e-5;
}
