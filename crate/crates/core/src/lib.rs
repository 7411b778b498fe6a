//! Rankings and inconsistency/incompleteness indices for pairwise comparison
//! matrices that may have missing judgments, plus the Monte Carlo studies
//! relating those indices to ranking error.

pub mod cli;
pub mod graph;
pub mod indices;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod montecarlo;
pub mod priority;
pub mod spanning;

pub use graph::{ComparisonGraph, Laplacian};
pub use indices::{IndexError, IndexReport};
pub use matrix::{MatrixError, PcMatrix};
pub use metrics::{LengthMismatch, OrdinalVector};
pub use priority::{EigenResult, PriorityError, PriorityVector, SquareMatrix};
