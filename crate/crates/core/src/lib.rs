//! Boosted optimal weighted least-squares approximation.

pub mod baselines;
pub mod basis;
pub mod bounds;
pub mod design;
pub mod error;
pub mod experiments;
pub mod projection;
pub mod sampling;
pub mod seed;
pub mod stability;
pub mod stats;
pub mod subsampling;

pub use error::{Error, Result};
