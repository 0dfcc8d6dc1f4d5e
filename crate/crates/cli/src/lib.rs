//! Library half of the `unim` binary: configuration files, summary
//! statistics, and file export. Split out so integration suites can
//! aggregate results with the exact code paths the binary uses.

pub mod config;
pub mod export;
pub mod stats;
