//! Library side of the `certkit` binary: configuration, reports, and the subcommands.

pub mod commands;
pub mod config;
pub mod output;
pub mod report;
