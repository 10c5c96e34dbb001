//! End-to-end runs of a scenario.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clearing::{
    clear_ideal, clear_split, clear_split_penalty, clear_vlb_unprocessed, ClearingError, ClearingOptions,
    ClearingResult, LpObserver,
};
use crate::lp::{DenseSimplex, LinearProgram, LpError, LpSolver};
use crate::metrics::{cost_recovery_audit, participant_surpluses, PriceSelection};
use crate::model::{validate_scenario, Diagnostic, Mode, Scenario, ValueLedger};
use crate::report::{CompareReport, IntervalReport, LedgerSnapshot, ModeOutcome, ModeRun, RunReport, Totals};
use crate::storage_ledger::{apply_discount, remove_simultaneous, update_ledger, LedgerError};

static REFERENCE_SOLVER: DenseSimplex = DenseSimplex;

/// Where a program handed to [`RunOptions::lp_sink`] comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpTag<'a> {
    pub mode: Mode,
    /// `None` for the single ideal clearing of the whole horizon.
    pub interval: Option<usize>,
    /// `"clearing"` or `"valuation"`.
    pub name: &'a str,
}

impl LpTag<'_> {
    /// A file name such as `vlb-mi0-valuation.lp`.
    pub fn file_name(&self) -> String {
        match self.interval {
            Some(i) => format!("{}-mi{i}-{}.lp", self.mode, self.name),
            None => format!("{}-{}.lp", self.mode, self.name),
        }
    }
}

pub type LpSink<'a> = &'a (dyn Fn(&LpTag<'_>, &LinearProgram) + Sync);

#[derive(Clone, Copy)]
pub struct RunOptions<'a> {
    pub solver: &'a dyn LpSolver,
    pub price_ranges: bool,
    pub price_selection: PriceSelection,
    /// Receives every program before it is solved.
    pub lp_sink: Option<LpSink<'a>>,
}

impl Default for RunOptions<'static> {
    fn default() -> Self {
        Self { solver: &REFERENCE_SOLVER, price_ranges: true, price_selection: PriceSelection::Point, lp_sink: None }
    }
}

impl fmt::Debug for RunOptions<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunOptions")
            .field("price_ranges", &self.price_ranges)
            .field("price_selection", &self.price_selection)
            .field("lp_sink", &self.lp_sink.is_some())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Validate,
    Clear,
    RemoveSimultaneous,
    UpdateLedger,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Validate => "validate",
            Stage::Clear => "clear",
            Stage::RemoveSimultaneous => "remove_simultaneous",
            Stage::UpdateLedger => "update_ledger",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunFailure {
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Clearing(#[from] ClearingError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureClass {
    Validation,
    Infeasible,
    Numerical,
    Other,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{mode}{}, stage {stage}: {failure}", .interval.map(|i| format!(", interval {i}")).unwrap_or_default())]
pub struct RunError {
    pub mode: Mode,
    pub interval: Option<usize>,
    pub stage: Stage,
    pub failure: RunFailure,
}

impl RunError {
    pub fn class(&self) -> FailureClass {
        let numerical = |e: &LpError| matches!(e, LpError::NumericalFailure(_));
        match &self.failure {
            RunFailure::Invalid(_) => FailureClass::Validation,
            RunFailure::Clearing(ClearingError::InvalidInput(_)) => FailureClass::Validation,
            RunFailure::Clearing(ClearingError::Infeasible { .. }) => FailureClass::Infeasible,
            RunFailure::Clearing(ClearingError::Solver(e)) | RunFailure::Ledger(LedgerError::Solver(e))
                if numerical(e) =>
            {
                FailureClass::Numerical
            }
            _ => FailureClass::Other,
        }
    }
}

/// Clears every interval of `scenario` under its mode and audits the outcome.
pub fn run(scenario: &Scenario, opts: &RunOptions<'_>) -> Result<RunReport, RunError> {
    let mode = scenario.mode;
    let diagnostics = validate_scenario(scenario);
    if !diagnostics.is_empty() {
        return Err(RunError {
            mode,
            interval: None,
            stage: Stage::Validate,
            failure: RunFailure::Invalid(diagnostics),
        });
    }

    let (results, ledger_snapshots) = match mode {
        Mode::Ideal => (run_ideal(scenario, opts)?, Vec::new()),
        Mode::SplitEndLevel | Mode::SplitPenalty => (run_split(scenario, opts)?, Vec::new()),
        Mode::Vlb => run_vlb(scenario, opts)?,
    };
    Ok(assemble(scenario, opts.price_selection, results, ledger_snapshots))
}

/// Runs `scenario` once per mode, in the given order. Modes run
/// concurrently; a failing mode does not affect the others.
pub fn compare(scenario: &Scenario, modes: &[Mode], opts: &RunOptions<'_>) -> CompareReport {
    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = modes
            .iter()
            .map(|&mode| {
                let scenario = scenario.with_mode(mode);
                scope.spawn(move || run(&scenario, opts))
            })
            .collect();
        handles
            .into_iter()
            .zip(modes)
            .map(|(h, &mode)| {
                let outcome = match h.join().expect("mode run panicked") {
                    Ok(report) => ModeOutcome::Report(report),
                    Err(e) => ModeOutcome::Error((&e).into()),
                };
                ModeRun { mode, outcome }
            })
            .collect()
    });
    CompareReport { runs }
}

fn clearing_options<'a>(opts: &RunOptions<'a>, observer: Option<LpObserver<'a>>) -> ClearingOptions<'a> {
    ClearingOptions { solver: opts.solver, price_ranges: opts.price_ranges, observer }
}

fn run_ideal(scenario: &Scenario, opts: &RunOptions<'_>) -> Result<Vec<ClearingResult>, RunError> {
    if scenario.intervals.is_empty() {
        return Ok(Vec::new());
    }
    let sink = |name: &str, lp: &LinearProgram| {
        if let Some(sink) = opts.lp_sink {
            sink(&LpTag { mode: Mode::Ideal, interval: None, name }, lp);
        }
    };
    let copts = clearing_options(opts, Some(&sink));
    let whole = clear_ideal(&scenario.storage, &scenario.intervals, &copts).map_err(|e| RunError {
        mode: Mode::Ideal,
        interval: None,
        stage: Stage::Clear,
        failure: e.into(),
    })?;
    Ok(whole.split_by_interval(&scenario.intervals))
}

fn run_split(scenario: &Scenario, opts: &RunOptions<'_>) -> Result<Vec<ClearingResult>, RunError> {
    let mode = scenario.mode;
    let mut e_init = scenario.storage.initial_energy;
    let mut results = Vec::with_capacity(scenario.intervals.len());
    for (i, spec) in scenario.intervals.iter().enumerate() {
        let sink = |name: &str, lp: &LinearProgram| {
            if let Some(sink) = opts.lp_sink {
                sink(&LpTag { mode, interval: Some(i), name }, lp);
            }
        };
        let copts = clearing_options(opts, Some(&sink));
        let result = match mode {
            Mode::SplitPenalty => clear_split_penalty(spec, &scenario.storage, e_init, &copts),
            _ => clear_split(spec, &scenario.storage, e_init, &copts),
        }
        .map_err(|e| RunError { mode, interval: Some(i), stage: Stage::Clear, failure: e.into() })?;
        e_init = result.final_content();
        results.push(result);
    }
    Ok(results)
}

fn run_vlb(scenario: &Scenario, opts: &RunOptions<'_>) -> Result<(Vec<ClearingResult>, Vec<LedgerSnapshot>), RunError> {
    let mut ledger = scenario.initial_ledger.clone().normalized();
    let mut results = Vec::with_capacity(scenario.intervals.len());
    let mut snapshots = Vec::with_capacity(scenario.intervals.len());
    for (i, spec) in scenario.intervals.iter().enumerate() {
        let fail =
            |stage: Stage| move |failure: RunFailure| RunError { mode: Mode::Vlb, interval: Some(i), stage, failure };
        if i > 0 && scenario.discount_rate > 0.0 {
            ledger = apply_discount(&ledger, scenario.discount_rate, i as i64 - 1);
        }
        let sink = |name: &str, lp: &LinearProgram| {
            if let Some(sink) = opts.lp_sink {
                sink(&LpTag { mode: Mode::Vlb, interval: Some(i), name }, lp);
            }
        };
        let copts = clearing_options(opts, Some(&sink));
        let raw = clear_vlb_unprocessed(spec, &scenario.storage, &ledger, &copts)
            .map_err(|e| fail(Stage::Clear)(e.into()))?;
        let result = remove_simultaneous(&raw).map_err(|e| fail(Stage::RemoveSimultaneous)(e.into()))?;
        let next =
            update_ledger(&ledger, &result, i as i64, &copts).map_err(|e| fail(Stage::UpdateLedger)(e.into()))?;
        snapshots.push(LedgerSnapshot { interval: i, before: ledger, after: next.clone() });
        ledger = next;
        results.push(result);
    }
    Ok((results, snapshots))
}

fn assemble(
    scenario: &Scenario,
    selection: PriceSelection,
    results: Vec<ClearingResult>,
    ledger_snapshots: Vec<LedgerSnapshot>,
) -> RunReport {
    let bids = &scenario.intervals;
    let surpluses = participant_surpluses(&results, bids, selection);
    let cycles = cost_recovery_audit(&results, bids, selection);
    let intervals: Vec<IntervalReport> = results
        .into_iter()
        .zip(bids)
        .enumerate()
        .map(|(index, (clearing, spec))| IntervalReport::new(index, spec, clearing))
        .collect();
    let totals = Totals::derive(&intervals, &surpluses, scenario.storage.initial_energy);
    RunReport {
        mode: scenario.mode,
        price_selection: selection,
        intervals,
        ledger_snapshots,
        surpluses,
        cycles,
        totals,
    }
}

/// Final ledger of a VLB report, or an empty ledger for other modes.
pub fn final_ledger(report: &RunReport) -> ValueLedger {
    report.ledger_snapshots.last().map(|s| s.after.clone()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::metrics::Verdict;
    use crate::model::parse_scenario;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-6
    }

    #[test]
    fn vlb_run_of_the_two_interval_example() {
        let s = parse_scenario(fixtures::TABLE1).unwrap().with_mode(Mode::Vlb);
        let opts = RunOptions { price_selection: PriceSelection::RangeMin, ..RunOptions::default() };
        let report = run(&s, &opts).unwrap();
        assert_eq!(report.intervals.len(), 2);
        assert_eq!(report.ledger_snapshots.len(), 2);
        assert!(close(report.ledger_snapshots[0].after.total(), 1.0));
        assert!(report.ledger_snapshots[1].after.is_empty());
        assert_eq!(report.cycles.len(), 1);
        assert_eq!(report.cycles[0].verdict, Verdict::Pass);
        assert!(close(report.totals.social_welfare, 27.0));
    }

    #[test]
    fn discounted_run_sells_earlier() {
        let s = parse_scenario(fixtures::TABLE5_DISCOUNT).unwrap();
        assert_eq!(s.mode, Mode::Vlb);
        let report = run(&s, &RunOptions::default()).unwrap();
        assert!(close(report.totals.social_welfare, 807.5), "{}", report.totals.social_welfare);
        let discharging: Vec<usize> = report
            .intervals
            .iter()
            .filter(|iv| iv.clearing.periods.iter().any(|p| p.inter_discharge_total() > 1e-6))
            .map(|iv| iv.index)
            .collect();
        assert_eq!(discharging, vec![3, 5]);
    }

    #[test]
    fn empty_scenario_gives_an_empty_report() {
        let mut s = parse_scenario(fixtures::TABLE1).unwrap();
        s.intervals.clear();
        for mode in Mode::ALL {
            let report = run(&s.with_mode(mode), &RunOptions::default()).unwrap();
            assert!(report.intervals.is_empty() && report.surpluses.is_empty() && report.cycles.is_empty());
            assert_eq!(report.totals.social_welfare, 0.0);
        }
    }

    #[test]
    fn errors_carry_interval_and_stage() {
        let mut s = parse_scenario(fixtures::TABLE1).unwrap().with_mode(Mode::SplitEndLevel);
        s.intervals[1].end_level = 2.0;
        s.intervals[1].generators.iter_mut().for_each(|g| g.max_quantity = vec![0.0]);
        let err = run(&s, &RunOptions::default()).unwrap_err();
        assert_eq!((err.interval, err.stage), (Some(1), Stage::Clear));
        assert_eq!(err.class(), FailureClass::Infeasible);
        assert!(err.to_string().contains("interval 1"), "{err}");

        let mut s = parse_scenario(fixtures::TABLE1).unwrap();
        s.discount_rate = 1.5;
        let err = run(&s, &RunOptions::default()).unwrap_err();
        assert_eq!((err.stage, err.class()), (Stage::Validate, FailureClass::Validation));
    }

    #[test]
    fn compare_keeps_going_after_a_failure() {
        let mut s = parse_scenario(fixtures::TABLE4).unwrap();
        s.intervals[0].penalty_price = None;
        let modes = [Mode::Ideal, Mode::SplitPenalty, Mode::Vlb];
        let report = compare(&s, &modes, &RunOptions::default());
        let order: Vec<Mode> = report.runs.iter().map(|r| r.mode).collect();
        assert_eq!(order, modes);
        assert!(matches!(report.runs[0].outcome, ModeOutcome::Report(_)));
        assert!(matches!(report.runs[1].outcome, ModeOutcome::Error(_)));
        assert!(matches!(report.runs[2].outcome, ModeOutcome::Report(_)));
    }

    #[test]
    fn sink_sees_tagged_programs() {
        let s = parse_scenario(fixtures::TABLE1).unwrap().with_mode(Mode::Vlb);
        let names = std::sync::Mutex::new(Vec::new());
        let sink = |tag: &LpTag<'_>, _: &LinearProgram| names.lock().unwrap().push(tag.file_name());
        let opts = RunOptions { lp_sink: Some(&sink), ..RunOptions::default() };
        run(&s, &opts).unwrap();
        assert_eq!(names.into_inner().unwrap(), ["vlb-mi0-clearing.lp", "vlb-mi0-valuation.lp", "vlb-mi1-clearing.lp"]);
    }
}
