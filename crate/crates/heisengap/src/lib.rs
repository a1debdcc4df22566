//! Experiment harness, file formats and command line on top of
//! `heisengap-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod pool;

pub use error::{HarnessError, Result};
pub mod harness;
pub mod report;
