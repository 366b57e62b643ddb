//! Config-driven runs and their reports.

mod config;
mod report;
mod run;
mod sweep;

pub use config::*;
pub use report::*;
pub use run::*;
pub use sweep::*;
