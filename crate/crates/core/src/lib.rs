pub mod analysis;
pub mod data;
pub mod error;
pub mod harness;
pub mod integrators;
pub mod model;
pub mod prng;

pub use error::{Error, Result};
