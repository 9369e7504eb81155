//! Low-regret learning from cutting-plane feedback.
//!
//! The crate is organised bottom up: [`geometry`] holds the convex-geometry
//! kernel, [`cutting_plane`] the learners and the repeated game,
//! [`oracles`] the adversaries answering queries, [`contextual`] the linear
//! contextual-search reductions and [`harness`] experiment plumbing and the
//! command line.

pub mod contextual;
pub mod cutting_plane;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod oracles;
pub mod rng;

pub use error::{Error, Result};
pub use rng::RngStream;
