//! Numerical laboratory for composition operators on weighted Hardy spaces.

// Parameter guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod coeff;
pub mod constants;
pub mod error;
pub mod operator;
pub mod par;
pub mod quad;
pub mod symbols;
pub mod weights;

pub use error::{LabError, Result};
