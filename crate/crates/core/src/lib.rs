//! Mixed-precision hybrid LDU factorization for sparse linear systems.
//!
//! The moderate part of a scaled matrix is factorized in a lower precision
//! with threshold postponing; that factorization preconditions a block GCR
//! solver which builds the Schur complement of the postponed (hard) part in
//! a higher precision. The Schur complement is then factorized with
//! symmetric 1x1/2x2 pivoting and its kernel is detected from pivot gaps.

pub mod dense;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod hybrid;
pub mod krylov;
pub mod lowfactor;
pub mod ordering;
pub mod precision;
pub mod sparsemat;

pub use error::{Error, Result};
