//! Configuration, parallel execution, reports and the command line of the
//! Carleman estimate laboratory. The numerics live in `carleman-core`.

pub mod cli;
pub mod config;
pub mod executor;
pub mod report;
pub mod suite;

pub use config::ExperimentConfig;
pub use report::VerificationReport;
