//! Dual-domain hyperspectral super-resolution.

pub mod autograd;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod tensor;
pub mod trainer;
pub mod wavelet;

pub use error::{Error, Result};
