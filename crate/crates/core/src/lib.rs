//! Differentiable control environments, automatic differentiation and the
//! controllers and experiments built on them.

pub mod agents;
pub mod autodiff;
pub mod bench;
pub mod cli;
pub mod config;
pub mod envs;
pub mod error;
pub mod linalg;
pub mod random;

pub use error::{Error, Result};
