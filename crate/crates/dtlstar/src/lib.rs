//! Command line front end and file formats for `dtlstar-core`.

pub mod budget;
pub mod cli;
pub mod formats;

pub use dtlstar_core as core;
