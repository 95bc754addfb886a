//! Std companion of `whim-core`: CSV ingestion, TOML configuration, report
//! writers, a parallel sweep driver, the HTTP service and the `whim` CLI.

pub mod analysis;
pub mod cli;
pub mod config;
mod error;
pub mod io;
pub mod service;
pub mod sweep;

pub use error::{Result, WhimError};
