//! Numerical laboratory for bilinearly controlled fourth-order parabolic equations on the torus.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
mod fft;
pub mod field;
pub mod local_exact;
pub mod moment;
pub mod saturation;
pub mod synthesis;

pub use error::{Error, Result};
pub use field::FourierField;
pub mod cli;
