//! Coloured bond percolation on two-dimensional lattices, with
//! method-of-simulated-moments estimation of the seed and edge probabilities.

pub mod cli;
pub mod config;
pub mod crn;
pub mod dsu;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod io;
pub mod lattice;
pub mod moments;
pub mod optimizer;
pub mod percolation;
pub mod studies;

pub use error::{Error, Result};
pub use lattice::{Lattice, LatticeKind, Sublattice};
pub use moments::MomentVector;
pub use percolation::{ColourField, ModelVariant, ParameterVector, SamplingMethod};
