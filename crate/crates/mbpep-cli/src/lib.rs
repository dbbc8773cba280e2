//! Command-line front end for the `mbpep` library: config documents,
//! commands, and report formats. Lives in a library so the pieces —
//! especially [`config::parse_config`] — are testable and fuzzable on
//! their own.

pub mod commands;
pub mod config;
pub mod report;
