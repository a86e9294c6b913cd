//! Reference implementations used only by tests.
//!
//! Everything here is written independently of the production crates and
//! favours obviousness over speed.

pub mod geodesic;
pub mod qp;
pub mod svm;
