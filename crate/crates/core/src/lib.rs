//! Sentence acceptability from language-model probabilities.
//!
//! The crate builds graded acceptability test sets, cleans crowdsourced
//! ratings, trains n-gram language models, turns token log-probabilities into
//! acceptability measures and runs the statistics used to study how document
//! context changes acceptability judgements.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod lm;
pub mod measures;
pub mod model;
pub mod ratings;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod testgen;

pub use error::{Error, Result};
