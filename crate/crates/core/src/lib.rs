//! Numerical evaluation of the Bogovskiĭ representation formula for `div v = F`
//! on star-shaped domains and on chains of overlapping star-shaped pieces.

// Negated comparisons are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bump;
pub mod decomposition;
pub mod dini;
pub mod error;
pub mod fieldlang;
pub mod geometry;
pub mod kernel;
pub mod point;
pub mod potential;
pub mod quadrature;
pub mod sampling;
pub mod verify;

pub use error::{BgkError, Result};
pub use point::{Mat, Point};
