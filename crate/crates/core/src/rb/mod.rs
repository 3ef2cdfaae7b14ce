//! Reduced basis approximation with a posteriori error control.

pub mod riesz;
pub mod space;

pub use space::{EnrichReport, Estimates, RbCheckpoint, RbSpace, ReducedPoint, GS_TOL};
