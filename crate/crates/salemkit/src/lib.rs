//! Exact finite truncations of randomized multiscale fractal measures.
//!
//! The crate is organised bottom-up:
//!
//! * [`scales`]: scale sequences, digit words, coding maps and weighted trees.
//! * [`samplers`]: digit pmfs, Dirichlet kernels, AD-regular sampling and
//!   two-partition sampling through a flow polytope decomposition.
//! * [`measures`]: lattice-supported measures with exact rational masses.
//! * [`constructions`]: the five named measure families.
//! * [`analysis`]: estimators, certificates and sharpness experiments.
//!
//! Every randomized routine draws from a [`samplers::Stream`] keyed by a
//! global seed and a node path, so results are reproducible bit for bit.

pub mod analysis;
pub mod constructions;
mod error;
pub mod measures;
pub mod samplers;
pub mod scales;

pub use error::{Error, Result};

/// Exact rational mass.
pub type Mass = num::BigRational;

/// Integer lattice point; a point `a` at level `n` represents `a / 𝔐_n`.
pub type Point = Vec<i64>;
