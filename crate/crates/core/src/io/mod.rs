//! Configuration parsing, artifact writers and experiment drivers.

pub mod config;
pub mod output;
pub mod run;
