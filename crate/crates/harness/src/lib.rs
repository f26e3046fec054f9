//! Scenario-driven verification runs for `lsmdual-core`.

pub mod dual;
pub mod error;
pub mod kinds;
pub mod report;
pub mod run;
pub mod scenario;
pub mod suite;

pub use error::{HarnessError, Result};
pub use report::{Check, RunReport, Verdict};
pub use run::{run_file, run_scenario, RunOptions};
pub use scenario::{Kind, Mode, Scenario};
pub use suite::{run_suite, SuiteReport};
