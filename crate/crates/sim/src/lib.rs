//! Config files, seeded Monte Carlo campaigns, CSV outputs and reference
//! checks for the `vbtrack-core` filters.

pub mod campaign;
pub mod config;
pub mod error;
pub mod oracles;
pub mod output;

pub use error::{Error, Result};
