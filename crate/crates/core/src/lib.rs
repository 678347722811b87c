pub mod analysis;
pub mod cli;
pub mod codec;
pub mod config;
pub mod covering;
pub mod dictionary;
pub mod error;
pub mod rational;
pub mod rd;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
