//! Dataset cartography for a small convolutional text classifier.
//!
//! The pipeline: build or load a corpus ([`corpus`]), turn texts into padded
//! embedding matrices plus scalar features ([`features`]), train the
//! five-layer 1-D CNN ([`model`]) while logging per-example logits at the end
//! of every epoch ([`dynamics`]), summarize each example as a
//! (confidence, variability, correctness) point, draw the data map
//! ([`cartoplot`]) and retrain on region subsets to measure
//! out-of-distribution generalization ([`harness`]).

pub mod cartoplot;
pub mod corpus;
pub mod dynamics;
pub mod error;
pub mod features;
pub mod harness;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
