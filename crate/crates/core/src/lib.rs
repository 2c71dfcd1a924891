//! Needlet frames over SVD bases, the NEED-D thresholding estimator and SVD
//! baselines for white-noise inverse problems, plus a Monte-Carlo harness for
//! the Wicksell unfolding problem.

// negated comparisons are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod filter;
pub mod frame;
pub mod jacobi;
pub mod models;
pub mod simlab;

pub use error::{Error, Result};
