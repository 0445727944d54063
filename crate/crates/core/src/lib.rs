//! Numerical laboratory for topological entropy and metric mean dimension.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod spaces;
pub mod systems;
pub mod counting;
pub mod estimators;
pub mod constructions;
pub mod experiment;

pub use error::{Error, Result};
