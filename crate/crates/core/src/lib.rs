//! Saliency attribution laboratory: Gradient x Input and epsilon-LRP on a
//! small `f64` network core, their competitive variants (CGI, CLRP), the
//! parameter- and data-randomization sanity checks, and a Monte-Carlo
//! model of why competition preserves maps of trained networks.

pub mod attribution;
pub mod cli;
pub mod data;
pub mod error;
pub mod nn;
pub mod render;
pub mod rng;
pub mod sanity;
pub mod tensor;
pub mod theory;

pub use error::{Error, Result};
pub use tensor::Tensor;
