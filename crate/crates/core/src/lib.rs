// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod cli;
pub mod compress;
pub mod config;
pub mod data;
pub mod error;
pub mod frontend;
pub mod io;
pub mod model;
pub mod norm;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
