//! Random-matrix experiments relating incompleteness and inconsistency to
//! ranking sensitivity.

mod sampling;
mod study;

pub use sampling::*;
pub use study::*;
