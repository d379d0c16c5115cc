//! Command-line front end: configuration, subcommands and reports.

pub mod commands;
pub mod config;
pub mod report;
