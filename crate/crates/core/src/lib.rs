//! Metric-driven behavioral logic locking for MiniC programs.

pub mod benchmarks;
pub mod costsel;
pub mod entropy;
pub mod error;
pub mod evaluate;
pub mod explore;
pub mod key;
pub mod locker;
pub mod lockpoints;
pub mod minic;
pub mod pipeline;
pub mod sim;

pub use error::{Error, Result};
