//! CLI front end: configuration assembly, run dispatch, and CSV emission.

pub mod app;
pub mod config;
pub mod output;
