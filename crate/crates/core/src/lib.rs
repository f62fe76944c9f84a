//! A small convolutional reading network trained on synthetic words, plus
//! the probes used to take it apart: word-selective unit search,
//! dissimilarity analysis, letter x position encoding models, factorial
//! position probes, connectivity dissection and activation maximization.

pub mod circuit;
pub mod cornet;
pub mod error;
pub mod pipeline;
pub mod probelab;
pub mod rng;
pub mod stimgen;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
