//! Compile integer distance functions onto multi-FeFET associative memory
//! cells, and simulate nearest-neighbor search on the resulting crossbars.
//!
//! The flow is: build a [`metric::DistanceMatrix`], find the smallest cell
//! that implements it with [`solver::find_min_k`], turn the solution into a
//! voltage-rank table with [`encoder::derive_encoding`], then program and
//! search an [`array::Crossbar`] built from [`device`] models.

pub mod apps;
pub mod array;
pub mod device;
pub mod encoder;
pub mod metric;
pub mod solver;
