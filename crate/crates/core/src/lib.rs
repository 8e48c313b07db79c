//! Lyapunov–Schmidt reduction toolkit for multi-bump synchronized solutions of
//! the linearly coupled Schrödinger system
//!
//! ```text
//! −Δu + (1 + εP(x))u = u³ + βv
//! −Δv + (1 + εQ(x))v = v³ + βu
//! ```
//!
//! on truncated tensor grids in dimension 1, 2 or 3.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod error;
pub mod field;
pub mod ground_state;
pub mod linsolve;
pub mod reduction;

pub use error::{Error, Result};
