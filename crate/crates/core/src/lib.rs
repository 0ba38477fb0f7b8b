pub mod domain;
pub mod environments;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod ogd;
pub mod optimistic;
pub mod oracle;
pub mod penalty;
pub mod trace;

pub use error::{Error, Result};
