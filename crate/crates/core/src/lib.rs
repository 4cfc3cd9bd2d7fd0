//! Exact solver toolkit for the two-stage stochastic 3D-printing knapsack
//! problem: pack items, printers and printing material under weight and
//! volume limits, then print against the demand scenario that materialises.
//!
//! The crate compiles an [`Instance`](model::Instance) into a single integer
//! program (the deterministic equivalent), solves it with a built-in
//! branch-and-bound over a bounded-variable simplex, and cross-checks results
//! against brute-force enumeration on tiny instances.

pub mod bound;
pub mod det_equiv;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod generator;
pub mod io;
pub mod lp;
pub mod mip;
pub mod model;
pub mod oracle;
pub mod rational;

pub use error::{Error, Result};
