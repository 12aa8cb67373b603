pub mod cli;
pub mod config;
pub mod data;
pub mod dual;
pub mod ennreg;
pub mod error;
pub mod fusion;
pub mod grfn;
pub mod kmeans;
pub mod metrics;
pub mod pipeline;
pub mod quadrature;
pub mod special;
pub mod training;
pub mod transform;

pub use error::{Error, Result};
pub use grfn::{Grfn, RealInterval};
