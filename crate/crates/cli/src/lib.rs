//! Command-line front end: configuration, the staged scan pipeline and the
//! similarity analysis.

pub mod config;
pub mod pipeline;
pub mod similarity;

pub use config::Config;
pub use pipeline::{Pipeline, Stage};
