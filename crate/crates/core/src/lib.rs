//! Clearing of energy markets with a non-merchant storage.
//!
//! A scenario is cleared interval by interval, or all at once, with the
//! storage embedded in the clearing program. The [`clearing`] module holds
//! the four clearing formulations, [`storage_ledger`] keeps the value of the
//! energy carried between intervals, [`metrics`] audits surpluses and
//! welfare, and [`runner`] ties everything together.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clearing;
pub mod fixtures;
pub mod lp;
pub mod metrics;
pub mod model;
pub mod report;
pub mod runner;
pub mod storage_ledger;

pub use clearing::{ClearingError, ClearingOptions, ClearingResult, PeriodOutcome};
pub use lp::PriceRange;
pub use metrics::{PriceSelection, Verdict};
pub use model::{parse_scenario, IntervalSpec, Mode, Scenario, StorageSpec, ValueBucket, ValueLedger};
pub use report::{emit, emit_comparison, CompareReport, Format, RunReport};
pub use runner::{compare, run, RunError, RunOptions};
pub use storage_ledger::LedgerError;
