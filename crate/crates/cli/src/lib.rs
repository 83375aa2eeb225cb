//! Command-line front end for `theta-bidiff`: argument parsing, run
//! configuration, output documents, resumable scans and the `verify` report.

pub mod app;
pub mod args;
pub mod config;
pub mod output;
pub mod sampling;
pub mod scan_file;
pub mod verify;

pub use app::run;
pub use config::RunConfig;
