//! Command-line front end: configuration, commands and output tables.

pub mod commands;
pub mod config;
pub mod output;
pub mod selfcheck;
