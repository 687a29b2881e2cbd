//! Library surface of the experiment harness, used by the CLI binary and the
//! integration suites.

pub mod commands;
pub mod config;
pub mod experiment;
