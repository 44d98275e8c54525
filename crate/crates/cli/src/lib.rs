//! Library side of the `sdconv` command-line tool: network config files and
//! the subcommand implementations.

pub mod commands;
pub mod config;

pub use config::NetworkConfig;
