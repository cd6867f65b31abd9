pub mod compression;
pub mod data;
pub mod error;
pub mod estimators;
pub mod exact_gaussian;
pub mod kernels;
pub mod linear;
pub mod matrix;
pub mod mlp;
pub mod model;
pub mod optim;
pub mod rng;
pub mod textio;

pub use error::{Error, Result};
pub use matrix::Matrix;
