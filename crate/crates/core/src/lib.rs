pub mod analysis;
pub mod engine;
pub mod error;
pub mod models;
pub mod scenario;
pub mod tables;

pub use error::{Error, Result};
