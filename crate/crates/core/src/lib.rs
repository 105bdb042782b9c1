//! Top-N recommendation with a matrix-factorization generator trained
//! adversarially against a linear autoencoder whose reconstruction error
//! serves as an energy function.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod numerics;
pub mod search;
pub mod seeds;
pub mod training;

pub use error::{Error, Result};
