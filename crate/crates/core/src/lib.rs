pub mod agent;
pub mod cmaes;
pub mod controller;
pub mod error;
pub mod extractor;
pub mod mnist;
pub mod racer;
pub mod reservoir;
pub mod rng;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
