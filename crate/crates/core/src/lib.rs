//! Geodesics of contact Carnot groups.
//!
//! The crate computes the full set of sub-Riemannian geodesics from the origin to
//! a point: isolated ones, sphere families, the counting functions `ν̂` and `β̂`,
//! their explicit linear bounds, isometric equivalence of geodesics, and the
//! nilpotent approximation of a contact frame.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod expmap;
pub mod fiber;
pub mod isometry;
pub mod model;
pub mod nilpotent;
pub mod oracle;

pub use error::{Error, Result};
pub use model::{dilate, BlockVec, Covector, GroupSpec, Point};
