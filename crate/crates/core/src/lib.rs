//! Secret key rates of Gaussian continuous-variable QKD protocols under
//! collective Gaussian attacks.

// Domain checks are written `!(x >= lo)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod gaussian;
pub mod output;
pub mod protocol;
pub mod sim;

pub use error::{Error, Result};
