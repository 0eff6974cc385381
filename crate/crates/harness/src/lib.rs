//! Configuration, experiment orchestration and reporting behind the
//! `varlex` command line.

pub mod calibration;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod suite;

pub use error::{HarnessError, Result};
