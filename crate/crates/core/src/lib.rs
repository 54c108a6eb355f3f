pub mod baseline;
pub mod bench;
pub mod betree;
pub mod config;
pub mod device;
pub mod error;
pub mod layout;
pub mod strategy;
pub mod word;
pub mod workload;

pub use error::{Error, Result};
