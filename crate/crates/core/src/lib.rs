//! Mixture-of-experts and Bayesian model averaging on synthetic polynomial
//! benchmarks, with a brute-force VC-dimension oracle.

pub mod bayes;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod models;
pub mod moe;
pub mod numerics;
pub mod vcdim;

pub use error::{Error, Result};
