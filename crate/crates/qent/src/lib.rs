//! Sweeps, record files and the `qent` command line on top of `qent-core`.
//!
//! Records are JSONL (a header line, one line per selected eigenstate, and a
//! marker after each finished cell); curves are CSV. Both start with a
//! version tag.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod cli;
pub mod config;
pub mod error;
pub mod langevin;
pub mod pipeline;
pub mod records;

pub use error::{Error, Result};
