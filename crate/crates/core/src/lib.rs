//! Penalty-regulated, Tikhonov-regularized splitting dynamics for constrained
//! monotone inclusions `0 ∈ A(x) + D(x) + N_C(x)`.

pub mod applications;
pub mod central_path;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod oracle;
pub mod schedules;

pub use error::{Error, Result};
