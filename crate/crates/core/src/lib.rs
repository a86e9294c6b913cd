//! Coverage planning for VHF smart-meter networks.

pub mod dataset;
pub mod error;
pub mod features;
pub mod geodata;
pub mod models;
pub mod planner;
pub mod synth;
pub mod tuning;

pub use error::{Error, Result};
