// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod dataset;
pub mod energy;
pub mod error;
pub mod eval;
pub mod formats;
pub mod functionals;
pub mod grid;
pub mod model;
pub mod rbnet;
pub mod split;
pub mod synth;
pub mod training;
pub mod units;
pub use error::{Result, XcError};
