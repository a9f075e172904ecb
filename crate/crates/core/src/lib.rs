//! Supervised similarity of word tuples.
//!
//! Builds distributional word spaces from a corpus ([`corpus`], [`linalg`],
//! [`spaces`]), maps tuples of terms to fixed-layout feature vectors
//! ([`features`]), trains a calibrated kernel SVM over labeled tuples
//! ([`classifier`]), and evaluates it on multiple-choice analogy and
//! paraphrase questions ([`tasks`]).

mod binio;
pub mod classifier;
pub mod corpus;
pub mod error;
pub mod features;
pub mod linalg;
pub mod spaces;
pub mod tasks;

pub use error::{Error, Result};
