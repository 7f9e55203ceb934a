//! File formats, command-line interface and HTTP session service for
//! `reground-core`.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod repl;
pub mod report;
pub mod server;
pub mod snapshot;
pub mod weights;
