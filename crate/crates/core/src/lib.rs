//! Universal domain adaptation on synthetic data: weighted adversarial
//! alignment with a self-supervised consistency term, and the experiments that
//! probe it.

pub mod error;
pub mod harness;
pub mod losses;
pub mod metrics;
pub mod ndcore;
pub mod synthdata;
pub mod weighting;

pub use error::{Error, Result};
