//! Configuration and output plumbing for the `jcarray` command.

pub mod config;
pub mod run;
