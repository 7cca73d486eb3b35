//! Experiment harness around the flow library: flat-file run configs,
//! prescribed-function construction, command dispatch, and artifact
//! emission. The binary is `mcflow`; see the crate-level commands for the
//! exit-code taxonomy.

pub mod commands;
pub mod config;
pub mod manifest;
