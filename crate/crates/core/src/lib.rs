//! Triangular type-2 fuzzy linear regression.
//!
//! Observed outputs are triangular type-2 fuzzy numbers. Cutting their
//! secondary memberships at a level `h` turns each one into an interval
//! type-2 footprint, and the regression coefficients are then fitted by a
//! quadratic program with possibility constraints on the upper membership
//! and necessity constraints on the lower membership.

pub mod data;
pub mod error;
pub mod eval;
pub mod fuzzy;
pub mod hcut;
pub mod qp;
pub mod regression;

pub use error::{Error, Result};
