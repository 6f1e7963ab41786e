//! Long-range directed polymer simulation and diagnostics.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod conv;
pub mod diagnostics;
pub mod environment;
pub mod error;
pub mod harness;
pub mod localization;
pub mod polymer;
pub mod rng;
pub mod special;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
