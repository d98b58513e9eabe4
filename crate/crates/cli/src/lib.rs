//! Instance files, JSON reports, reference oracles and random generators
//! around the `qlr` solvers.

pub mod corpus;
pub mod format;
pub mod generate;
pub mod oracle;
pub mod report;
pub mod run;

pub use format::{parse_instance, print_instance, FormatError, Instance, Logic};
pub use report::WitnessReport;
pub use run::{solve, verify_report, RunError, SolveOptions};
