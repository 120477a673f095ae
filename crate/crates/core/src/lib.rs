//! Confidence distributions for a scalar parameter: construction from
//! common data summaries, combination across independent studies, and
//! simulation checks of the combined results.

pub mod cd;
pub mod cli;
pub mod combiner;
pub mod error;
pub mod numkernel;
pub mod rng;
pub mod slope;
pub mod studies;

pub use error::{Error, Result};
