//! Domain types shared by every other module, plus scenario ingestion.
//!
//! A [`Scenario`] is read from a TOML document. The document layer lives in
//! [`document`](self::document) and is kept separate from the domain types so
//! that the on-disk field names (`max`, `utility`, ...) stay stable even if the
//! in-memory names change.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod document;
mod validate;

pub use validate::validate_scenario;

/// Comparison tolerance for invariant checks on quantities and prices.
pub const EPS: f64 = 1e-9;

/// Periods of one market interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub n_periods: usize,
    /// Period length in hours.
    pub delta_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadBid {
    pub id: String,
    /// Utility per period, money per MWh.
    pub utility: Vec<f64>,
    /// Maximum consumption per period, MW.
    pub max_quantity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorBid {
    pub id: String,
    /// Marginal cost per period, money per MWh.
    pub cost: Vec<f64>,
    /// Maximum production per period, MW.
    pub max_quantity: Vec<f64>,
}

/// The single non-merchant storage system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageSpec {
    /// Energy capacity, MWh.
    pub capacity: f64,
    /// Level at the start of the horizon, MWh. Ignored in VLB mode, where the
    /// starting content is the initial ledger.
    pub initial_energy: f64,
}

/// Bids and storage targets for one market interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSpec {
    pub grid: TimeGrid,
    pub loads: Vec<LoadBid>,
    pub generators: Vec<GeneratorBid>,
    /// Storage level targeted at the end of the interval, MWh.
    pub end_level: f64,
    /// Value per MWh subtracted for energy left at the end of the interval;
    /// only read by [`Mode::SplitPenalty`].
    pub penalty_price: Option<f64>,
}

impl IntervalSpec {
    pub fn n_periods(&self) -> usize {
        self.grid.n_periods
    }

    pub fn delta_t(&self) -> f64 {
        self.grid.delta_t
    }
}

/// Energy carried between intervals at a remembered charging price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueBucket {
    pub price: f64,
    pub quantity: f64,
    /// Interval (0-based) in which the energy was net-charged. Energy that
    /// predates the horizon may carry a negative index.
    pub birth_interval: i64,
}

/// Ordered set of value buckets making up the inter-interval storage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueLedger {
    pub buckets: Vec<ValueBucket>,
}

impl ValueLedger {
    pub fn new(buckets: Vec<ValueBucket>) -> Self {
        Self { buckets }
    }

    pub fn total(&self) -> f64 {
        self.buckets.iter().map(|b| b.quantity).sum()
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ValueBucket> {
        self.buckets.iter()
    }

    /// Sorts by ascending price (then birth) and merges buckets that share
    /// both price (within [`EPS`]) and birth interval. Empty buckets are
    /// dropped.
    pub fn normalized(mut self) -> Self {
        self.buckets.retain(|b| b.quantity > EPS);
        self.buckets.sort_by(|a, b| a.price.total_cmp(&b.price).then(a.birth_interval.cmp(&b.birth_interval)));
        let mut merged: Vec<ValueBucket> = Vec::with_capacity(self.buckets.len());
        for bucket in self.buckets {
            match merged.last_mut() {
                Some(last)
                    if (last.price - bucket.price).abs() <= EPS && last.birth_interval == bucket.birth_interval =>
                {
                    last.quantity += bucket.quantity;
                }
                _ => merged.push(bucket),
            }
        }
        Self { buckets: merged }
    }
}

/// How the horizon is cleared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Every interval in one optimisation.
    Ideal,
    /// Interval by interval, with the end level imposed as an equality.
    SplitEndLevel,
    /// Interval by interval, with a penalty on the final level.
    SplitPenalty,
    /// Interval by interval with virtual linking bids.
    Vlb,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Ideal, Mode::SplitEndLevel, Mode::SplitPenalty, Mode::Vlb];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ideal => "ideal",
            Mode::SplitEndLevel => "split_end_level",
            Mode::SplitPenalty => "split_penalty",
            Mode::Vlb => "vlb",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (expected one of ideal, split_end_level, split_penalty, vlb)"))
    }
}

/// A complete problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub storage: StorageSpec,
    pub intervals: Vec<IntervalSpec>,
    pub mode: Mode,
    /// Fraction in `[0, 1)` by which ledger prices decay after each interval.
    pub discount_rate: f64,
    pub initial_ledger: ValueLedger,
}

impl Scenario {
    pub fn with_mode(&self, mode: Mode) -> Scenario {
        Scenario { mode, ..self.clone() }
    }
}

/// One violated invariant, located by a dotted path into the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid scenario: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: document::ScenarioDoc = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|span| line_column(text, span.start)).unwrap_or((0, 0));
        ScenarioError::Syntax { line, column, message: e.message().to_string() }
    })?;
    let scenario = Scenario::from(doc);
    let diagnostics = validate_scenario(&scenario);
    if diagnostics.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(diagnostics))
    }
}

/// Renders a scenario back to its document form.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let doc = document::ScenarioDoc::from(scenario);
    toml::to_string(&doc).expect("scenario documents contain only tables, arrays and scalars")
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parses_two_interval_fixture() {
        let s = parse_scenario(fixtures::TABLE1).unwrap();
        assert_eq!(s.intervals.len(), 2);
        assert_eq!(s.storage.capacity, 2.5);
        assert_eq!(s.intervals[0].loads.len(), 1);
        assert_eq!(s.intervals[0].generators.len(), 2);
        assert_eq!(s.intervals[0].end_level, 1.0);
        assert_eq!(s.intervals[1].end_level, 0.0);
        assert_eq!(s.intervals[1].loads[0].max_quantity, vec![3.0]);
    }

    #[test]
    fn empty_market_is_legal() {
        let text = r#"
mode = "split_end_level"
discount_rate = 0.0

[storage]
capacity = 1.0
initial_energy = 0.0

[[intervals]]
delta_t = 1.0
n_periods = 1
end_level = 0.0
"#;
        let s = parse_scenario(text).unwrap();
        assert!(s.intervals[0].loads.is_empty());
        assert!(s.intervals[0].generators.is_empty());
        assert!(s.initial_ledger.is_empty());
    }

    #[test]
    fn initial_energy_above_capacity_is_rejected() {
        let text = r#"
mode = "split_end_level"
discount_rate = 0.0

[storage]
capacity = 2.5
initial_energy = 3.0
"#;
        match parse_scenario(text) {
            Err(ScenarioError::Invalid(diags)) => {
                assert_eq!(diags.len(), 1);
                assert_eq!(diags[0].path, "storage.initial_energy");
                assert!(diags[0].message.contains("initial energy exceeds capacity"));
            }
            other => panic!("expected invalid scenario, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let text = "mode = \"vlb\"\ndiscount_rate = = 0.1\n";
        match parse_scenario(text) {
            Err(ScenarioError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_mode_is_a_syntax_error() {
        let text = "mode = \"greedy\"\ndiscount_rate = 0.0\n[storage]\ncapacity = 1.0\ninitial_energy = 0.0\n";
        assert!(matches!(parse_scenario(text), Err(ScenarioError::Syntax { .. })));
    }

    #[test]
    fn fixtures_round_trip() {
        for text in fixtures::ALL.iter().map(|(_, t)| t) {
            let s = parse_scenario(text).unwrap();
            let again = parse_scenario(&serialize_scenario(&s)).unwrap();
            assert_eq!(s, again);
        }
    }

    #[test]
    fn normalizing_merges_equal_price_and_birth() {
        let ledger = ValueLedger::new(vec![
            ValueBucket { price: 7.0, quantity: 1.0, birth_interval: 0 },
            ValueBucket { price: 5.0, quantity: 0.5, birth_interval: 1 },
            ValueBucket { price: 5.0, quantity: 0.25, birth_interval: 1 },
            ValueBucket { price: 5.0, quantity: 1.0, birth_interval: 0 },
            ValueBucket { price: 3.0, quantity: 0.0, birth_interval: 0 },
        ])
        .normalized();
        let got: Vec<_> = ledger.iter().map(|b| (b.price, b.quantity, b.birth_interval)).collect();
        assert_eq!(got, vec![(5.0, 1.0, 0), (5.0, 0.75, 1), (7.0, 1.0, 0)]);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("split".parse::<Mode>().is_err());
    }
}
