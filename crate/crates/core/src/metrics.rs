//! Surpluses, storage cycles and welfare over a sequence of cleared
//! intervals.
//!
//! All functions take one [`ClearingResult`] per interval, aligned with the
//! interval bids. A whole-horizon result should first be cut with
//! [`ClearingResult::split_by_interval`].

use serde::{Deserialize, Serialize};

use crate::clearing::{period_welfare, ClearingResult, PeriodOutcome};
use crate::model::{IntervalSpec, EPS};

/// Tolerance of the cost-recovery verdict.
pub const AUDIT_TOL: f64 = 1e-6;

pub const STORAGE_ID: &str = "storage";

/// Which element of each period's price range the audit settles at.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceSelection {
    #[default]
    Point,
    RangeMin,
    RangeMax,
}

impl PriceSelection {
    pub fn as_str(self) -> &'static str {
        match self {
            PriceSelection::Point => "point",
            PriceSelection::RangeMin => "range_min",
            PriceSelection::RangeMax => "range_max",
        }
    }
}

impl std::fmt::Display for PriceSelection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PriceSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "point" => Ok(PriceSelection::Point),
            "range_min" => Ok(PriceSelection::RangeMin),
            "range_max" => Ok(PriceSelection::RangeMax),
            _ => Err(format!("unknown price selection `{s}` (expected point, range_min or range_max)")),
        }
    }
}

/// Settlement price of a period. Falls back to the point price when no
/// range was computed.
pub fn settlement_price(period: &PeriodOutcome, selection: PriceSelection) -> f64 {
    match (selection, period.price_range) {
        (PriceSelection::RangeMin, Some(r)) => r.lower,
        (PriceSelection::RangeMax, Some(r)) => r.upper,
        _ => period.price,
    }
}

/// `price * quantity`, with zero quantity settling to zero even at an
/// unbounded price.
fn payment(price: f64, quantity: f64) -> f64 {
    if quantity == 0.0 {
        0.0
    } else {
        price * quantity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipantKind {
    Load,
    Generator,
    Storage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurplusLine {
    pub participant: String,
    pub kind: ParticipantKind,
    pub interval: usize,
    #[serde(with = "crate::report::extended_float")]
    pub surplus: f64,
}

/// One surplus line per load, generator and the storage, per interval.
///
/// Loads earn `Δt Σ (U - λ) d`, generators `Δt Σ (λ - C) p`, and the
/// storage `-Δt Σ λ · net charge`.
pub fn participant_surpluses(
    results: &[ClearingResult],
    bids: &[IntervalSpec],
    selection: PriceSelection,
) -> Vec<SurplusLine> {
    let mut lines = Vec::new();
    for (i, (result, spec)) in results.iter().zip(bids).enumerate() {
        let dt = result.delta_t;
        for (l, load) in spec.loads.iter().enumerate() {
            let surplus = result
                .periods
                .iter()
                .enumerate()
                .map(|(t, p)| dt * (load.utility[t] * p.loads[l] - payment(settlement_price(p, selection), p.loads[l])))
                .sum();
            lines.push(SurplusLine { participant: load.id.clone(), kind: ParticipantKind::Load, interval: i, surplus });
        }
        for (g, generator) in spec.generators.iter().enumerate() {
            let surplus = result
                .periods
                .iter()
                .enumerate()
                .map(|(t, p)| {
                    dt * (payment(settlement_price(p, selection), p.generators[g])
                        - generator.cost[t] * p.generators[g])
                })
                .sum();
            lines.push(SurplusLine {
                participant: generator.id.clone(),
                kind: ParticipantKind::Generator,
                interval: i,
                surplus,
            });
        }
        lines.push(SurplusLine {
            participant: STORAGE_ID.to_string(),
            kind: ParticipantKind::Storage,
            interval: i,
            surplus: storage_surplus(result, selection),
        });
    }
    lines
}

/// `-Δt Σ_t λ_t · net charge_t` for one interval.
pub fn storage_surplus(result: &ClearingResult, selection: PriceSelection) -> f64 {
    -result.delta_t
        * result.periods.iter().map(|p| payment(settlement_price(p, selection), p.storage_charge)).sum::<f64>()
}

/// Consecutive intervals `start..=end`. A closed cycle starts and ends with
/// an empty storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub start: usize,
    pub end: usize,
    pub closed: bool,
}

impl Cycle {
    pub fn intervals(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// Partitions the intervals into cycles. From each interval that starts
/// empty, a cycle runs to the first interval that ends empty. Intervals not
/// covered that way (the storage never empties again, or the horizon starts
/// non-empty) form open cycles.
pub fn detect_cycles(results: &[ClearingResult]) -> Vec<Cycle> {
    let mut cycles = Vec::new();
    let mut i = 0;
    while i < results.len() {
        let starts_empty = results[i].initial_content <= EPS;
        let close = (i..results.len()).find(|&j| results[j].final_content() <= EPS);
        match close {
            Some(j) => {
                cycles.push(Cycle { start: i, end: j, closed: starts_empty });
                i = j + 1;
            }
            None => {
                cycles.push(Cycle { start: i, end: results.len() - 1, closed: false });
                break;
            }
        }
    }
    cycles
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The cycle does not close, so the value of the energy left in storage
    /// is unknown.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub start: usize,
    pub end: usize,
    pub closed: bool,
    #[serde(with = "crate::report::extended_float")]
    pub storage_surplus: f64,
    pub verdict: Verdict,
    pub social_welfare: f64,
}

/// Storage surplus and cost-recovery verdict for every cycle.
pub fn cost_recovery_audit(
    results: &[ClearingResult],
    bids: &[IntervalSpec],
    selection: PriceSelection,
) -> Vec<CycleReport> {
    detect_cycles(results)
        .into_iter()
        .map(|cycle| {
            let surplus: f64 = cycle.intervals().map(|i| storage_surplus(&results[i], selection)).sum();
            let verdict = if !cycle.closed || surplus.is_nan() {
                Verdict::Indeterminate
            } else if surplus >= -AUDIT_TOL {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            CycleReport {
                start: cycle.start,
                end: cycle.end,
                closed: cycle.closed,
                storage_surplus: surplus,
                verdict,
                social_welfare: social_welfare(results, bids, &cycle),
            }
        })
        .collect()
}

/// `Δt Σ_t (Σ_l U d - Σ_g C p)` over the intervals of `cycle`.
pub fn social_welfare(results: &[ClearingResult], bids: &[IntervalSpec], cycle: &Cycle) -> f64 {
    cycle.intervals().map(|i| interval_welfare(&results[i], &bids[i])).sum()
}

pub fn interval_welfare(result: &ClearingResult, spec: &IntervalSpec) -> f64 {
    result.periods.iter().enumerate().map(|(t, p)| result.delta_t * period_welfare(spec, t, p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clearing::{clear_ideal, clear_split, clear_vlb, ClearingOptions};
    use crate::fixtures;
    use crate::model::{parse_scenario, Scenario, ValueLedger};
    use crate::storage_ledger::update_ledger;

    fn split_run(s: &Scenario) -> Vec<ClearingResult> {
        let opts = ClearingOptions::default();
        let mut e = s.storage.initial_energy;
        s.intervals
            .iter()
            .map(|spec| {
                let r = clear_split(spec, &s.storage, e, &opts).unwrap();
                e = r.final_content();
                r
            })
            .collect()
    }

    fn vlb_run(s: &Scenario) -> Vec<ClearingResult> {
        let opts = ClearingOptions::default();
        let mut ledger = ValueLedger::default();
        s.intervals
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let r = clear_vlb(spec, &s.storage, &ledger, &opts).unwrap();
                ledger = update_ledger(&ledger, &r, i as i64, &opts).unwrap();
                r
            })
            .collect()
    }

    fn storage_lines(lines: &[SurplusLine]) -> Vec<f64> {
        lines.iter().filter(|l| l.kind == ParticipantKind::Storage).map(|l| l.surplus).collect()
    }

    #[test]
    fn split_storage_loses_money_at_the_lowest_price() {
        let s = parse_scenario(fixtures::TABLE1).unwrap();
        let results = split_run(&s);
        let lines = participant_surpluses(&results, &s.intervals, PriceSelection::RangeMin);
        let storage = storage_lines(&lines);
        assert!((storage[0] + 5.0).abs() < 1e-6 && (storage[1] - 2.0).abs() < 1e-6, "{storage:?}");

        let audit = cost_recovery_audit(&results, &s.intervals, PriceSelection::RangeMin);
        assert_eq!(audit.len(), 1);
        assert_eq!((audit[0].start, audit[0].end), (0, 1));
        assert!((audit[0].storage_surplus + 3.0).abs() < 1e-6);
        assert_eq!(audit[0].verdict, Verdict::Fail);
        assert!((audit[0].social_welfare - 27.0).abs() < 1e-6);
    }

    #[test]
    fn vlb_storage_breaks_even_at_the_lowest_price() {
        let s = parse_scenario(fixtures::TABLE1).unwrap();
        let results = vlb_run(&s);
        let audit = cost_recovery_audit(&results, &s.intervals, PriceSelection::RangeMin);
        assert_eq!(audit.len(), 1);
        assert!(audit[0].storage_surplus.abs() < 1e-6);
        assert_eq!(audit[0].verdict, Verdict::Pass);
    }

    #[test]
    fn welfare_of_three_interval_runs() {
        let s = parse_scenario(fixtures::TABLE4).unwrap();
        let whole = Cycle { start: 0, end: 2, closed: true };
        let split = split_run(&s);
        assert!((social_welfare(&split, &s.intervals, &whole) + 1.0).abs() < 1e-6);
        let vlb = vlb_run(&s);
        assert!((social_welfare(&vlb, &s.intervals, &whole) - 16.0).abs() < 1e-6);
        let ideal =
            clear_ideal(&s.storage, &s.intervals, &ClearingOptions::default()).unwrap().split_by_interval(&s.intervals);
        assert!((social_welfare(&ideal, &s.intervals, &whole) - 21.0).abs() < 1e-6);
    }

    #[test]
    fn long_holding_forms_a_single_cycle() {
        let s = parse_scenario(fixtures::TABLE5).unwrap();
        let cycles = detect_cycles(&vlb_run(&s));
        assert_eq!(cycles, vec![Cycle { start: 0, end: 5, closed: true }]);
    }

    #[test]
    fn idle_storage_gives_trivial_cycles() {
        let s = parse_scenario(fixtures::TABLE1).unwrap();
        let mut results = split_run(&s);
        for r in &mut results {
            r.initial_content = 0.0;
            for p in &mut r.periods {
                p.storage_charge = 0.0;
                p.storage_level = 0.0;
            }
        }
        let audit = cost_recovery_audit(&results, &s.intervals, PriceSelection::Point);
        assert_eq!(audit.len(), 2);
        for (i, c) in audit.iter().enumerate() {
            assert_eq!((c.start, c.end, c.closed), (i, i, true));
            assert_eq!(c.storage_surplus, 0.0);
            assert_eq!(c.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn unfinished_cycle_is_indeterminate() {
        let s = parse_scenario(fixtures::TABLE6).unwrap();
        let results = split_run(&s);
        let audit = cost_recovery_audit(&results, &s.intervals, PriceSelection::Point);
        assert_eq!(audit.len(), 1);
        assert!(!audit[0].closed);
        assert_eq!(audit[0].verdict, Verdict::Indeterminate);
    }

    #[test]
    fn surpluses_add_up_to_welfare() {
        for (_, doc) in fixtures::ALL {
            let s = parse_scenario(doc).unwrap();
            let results = split_run(&s);
            for selection in [PriceSelection::Point, PriceSelection::RangeMin, PriceSelection::RangeMax] {
                let lines = participant_surpluses(&results, &s.intervals, selection);
                for (i, (r, spec)) in results.iter().zip(&s.intervals).enumerate() {
                    let total: f64 = lines.iter().filter(|l| l.interval == i).map(|l| l.surplus).sum();
                    let welfare = interval_welfare(r, spec);
                    if total.is_finite() {
                        assert!((total - welfare).abs() < 1e-6, "{selection}: {total} vs {welfare}");
                    }
                }
            }
        }
    }

    #[test]
    fn no_trade_means_no_welfare() {
        let s = parse_scenario(fixtures::TABLE1).unwrap();
        let results = split_run(&s);
        let mut empty = results.clone();
        for p in empty.iter_mut().flat_map(|r| r.periods.iter_mut()) {
            p.loads.iter_mut().for_each(|d| *d = 0.0);
            p.generators.iter_mut().for_each(|g| *g = 0.0);
        }
        let all = Cycle { start: 0, end: 1, closed: true };
        assert_eq!(social_welfare(&empty, &s.intervals, &all), 0.0);
    }

    #[test]
    fn selection_names_parse() {
        for s in [PriceSelection::Point, PriceSelection::RangeMin, PriceSelection::RangeMax] {
            assert_eq!(s.as_str().parse::<PriceSelection>().unwrap(), s);
        }
        assert!("mid".parse::<PriceSelection>().is_err());
    }
}
