//! Scenario configuration, execution, and reporting for the `hamot` binary.

pub mod config;
pub mod report;
pub mod runner;
pub mod scenario;
