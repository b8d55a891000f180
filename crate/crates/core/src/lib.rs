//! Syntax-aware semantic role labeling with gated graph convolutions over
//! dependency trees, stacked on a BiLSTM encoder.

pub mod bilstm;
pub mod classifier;
pub mod cli;
pub mod config;
pub mod conll;
pub mod embedder;
pub mod error;
pub mod evaluator;
pub mod fixtures;
pub mod gcn;
pub mod lexicon;
pub mod model;
pub mod numerics;
pub mod predictions;
pub mod syngraph;
pub mod trainer;

pub use error::{Error, Result};
