//! Command-line front end of the stwave solver: TOML configuration, the
//! `symbol`, `solve-linear`, `solve-wave` and `verify` subcommands, and the
//! persisted output formats.

pub mod commands;
pub mod config;
pub mod io;
pub mod verify;
