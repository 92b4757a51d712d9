pub mod annuli;
pub mod cli;
pub mod embeddings;
pub mod error;
pub mod extended;
pub mod frame;
pub mod harness;
pub mod quadrature;
pub mod seqspace;
pub mod special;
pub mod spectral;
pub mod weights;

pub use error::{AflError, Result};
