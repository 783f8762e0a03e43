// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for `floqopt`: configuration, subcommands and the
//! verification suites.

pub mod commands;
pub mod config;
pub mod drive_spec;
pub mod error;
pub mod verify;

pub use commands::run;
pub use error::{CliError, CliResult};
