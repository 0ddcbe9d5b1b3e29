//! Censored and kinked structural vector autoregressions.

pub mod companion;
pub mod error;
pub mod harness;
pub mod jsr;
pub mod limit;
pub mod linalg;
pub mod model;
pub mod recursion;
pub mod simulate;
pub mod vecm;

pub use error::{CksvarError, Result};
