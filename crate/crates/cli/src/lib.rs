//! Library surface of the `mbr` command-line tool: record IO, report
//! writers and the command implementations, kept callable so tests can
//! exercise the pipelines end to end.

pub mod commands;
pub mod records;
pub mod report;
