//! Exact spectra and semiclassical splitting predictions for one-dimensional
//! periodic systems whose Hamiltonians are non-smooth on finitely many lines.

// guards are written `!(a > b)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod catalog;
pub mod classical;
pub mod error;
pub mod model;
pub mod numerics;
pub mod parallel;
pub mod predictor;
pub mod quantize;

pub use error::{Error, Result};
