//! Front propagation in periodic perforated domains.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
mod error;
pub mod fronts;
pub mod geodesy;
pub mod geometry;
pub mod lattice;
pub mod subsolution;
pub mod workbench;
pub mod wulff;

pub use error::{Error, Result};
