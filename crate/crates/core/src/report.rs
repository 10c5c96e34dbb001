//! Run reports and their text and JSON renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::clearing::ClearingResult;
use crate::metrics::{interval_welfare, CycleReport, ParticipantKind, PriceSelection, SurplusLine};
use crate::model::{IntervalSpec, Mode, ValueLedger};
use crate::runner::{FailureClass, RunError, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub index: usize,
    pub load_ids: Vec<String>,
    pub generator_ids: Vec<String>,
    pub social_welfare: f64,
    pub clearing: ClearingResult,
}

impl IntervalReport {
    pub fn new(index: usize, spec: &IntervalSpec, clearing: ClearingResult) -> Self {
        Self {
            index,
            load_ids: spec.loads.iter().map(|l| l.id.clone()).collect(),
            generator_ids: spec.generators.iter().map(|g| g.id.clone()).collect(),
            social_welfare: interval_welfare(&clearing, spec),
            clearing,
        }
    }
}

/// Ledger around one VLB interval. `before` already includes the discount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub interval: usize,
    pub before: ValueLedger,
    pub after: ValueLedger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub social_welfare: f64,
    #[serde(with = "extended_float")]
    pub load_surplus: f64,
    #[serde(with = "extended_float")]
    pub generator_surplus: f64,
    #[serde(with = "extended_float")]
    pub storage_surplus: f64,
    /// Sum of the interval objectives.
    pub objective: f64,
    pub final_content: f64,
}

impl Totals {
    pub fn derive(intervals: &[IntervalReport], surpluses: &[SurplusLine], initial_content: f64) -> Self {
        let of_kind = |kind| surpluses.iter().filter(|l| l.kind == kind).map(|l| l.surplus).sum();
        Self {
            social_welfare: intervals.iter().map(|iv| iv.social_welfare).sum(),
            load_surplus: of_kind(ParticipantKind::Load),
            generator_surplus: of_kind(ParticipantKind::Generator),
            storage_surplus: of_kind(ParticipantKind::Storage),
            objective: intervals.iter().map(|iv| iv.clearing.objective).sum(),
            final_content: intervals.last().map_or(initial_content, |iv| iv.clearing.final_content()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub price_selection: PriceSelection,
    pub intervals: Vec<IntervalReport>,
    pub ledger_snapshots: Vec<LedgerSnapshot>,
    pub surpluses: Vec<SurplusLine>,
    pub cycles: Vec<CycleReport>,
    pub totals: Totals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub class: FailureClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<usize>,
    pub stage: Stage,
    pub message: String,
}

impl From<&RunError> for ErrorSummary {
    fn from(e: &RunError) -> Self {
        Self { class: e.class(), interval: e.interval, stage: e.stage, message: e.failure.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeOutcome {
    Report(RunReport),
    Error(ErrorSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRun {
    pub mode: Mode,
    #[serde(flatten)]
    pub outcome: ModeOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub runs: Vec<ModeRun>,
}

impl CompareReport {
    pub fn report(&self, mode: Mode) -> Option<&RunReport> {
        self.runs.iter().find(|r| r.mode == mode).and_then(|r| match &r.outcome {
            ModeOutcome::Report(report) => Some(report),
            ModeOutcome::Error(_) => None,
        })
    }

    /// First error in mode order.
    pub fn first_error(&self) -> Option<&ErrorSummary> {
        self.runs.iter().find_map(|r| match &r.outcome {
            ModeOutcome::Error(e) => Some(e),
            ModeOutcome::Report(_) => None,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Table,
    Structured,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Format::Table),
            "structured" => Ok(Format::Structured),
            _ => Err(format!("unknown format `{s}` (expected table or structured)")),
        }
    }
}

pub fn emit(report: &RunReport, format: Format) -> String {
    match format {
        Format::Table => render_run(report),
        Format::Structured => structured(report),
    }
}

pub fn emit_comparison(report: &CompareReport, format: Format) -> String {
    match format {
        Format::Table => render_comparison(report),
        Format::Structured => structured(report),
    }
}

fn structured<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("reports serialise");
    out.push('\n');
    out
}

pub fn parse_structured(text: &str) -> Result<RunReport, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn parse_structured_comparison(text: &str) -> Result<CompareReport, serde_json::Error> {
    serde_json::from_str(text)
}

/// Number with up to six decimals and no trailing zeros.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn render(&self, out: &mut String) {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |out: &mut String, cells: &[String]| {
            let text: Vec<String> =
                cells.iter().zip(&widths).map(|(c, &w)| format!("{}{c}", " ".repeat(w - c.chars().count()))).collect();
            out.push_str(text.join("  ").trim_end());
            out.push('\n');
        };
        line(out, &self.header);
        for row in &self.rows {
            line(out, row);
        }
    }
}

fn dispatch_table(report: &RunReport) -> Table {
    let n_loads = report.intervals.iter().map(|iv| iv.load_ids.len()).max().unwrap_or(1);
    let n_gens = report.intervals.iter().map(|iv| iv.generator_ids.len()).max().unwrap_or(1);
    let numbered = |prefix: &str, n: usize| -> Vec<String> {
        if n == 1 {
            vec![prefix.to_string()]
        } else {
            (1..=n).map(|k| format!("{prefix}{k}")).collect()
        }
    };
    let vlb = report.mode == Mode::Vlb;
    let mut header = vec!["MI".to_string(), "t".to_string()];
    header.extend(numbered("d", n_loads));
    header.extend(numbered("p", n_gens));
    if vlb {
        header.extend(["pC", "pDe", "ea", "ee"].map(String::from));
    } else {
        header.extend(["pC", "e"].map(String::from));
    }
    header.extend(["λ", "λ range"].map(String::from));

    let mut table = Table::new(header);
    for iv in &report.intervals {
        for (t, p) in iv.clearing.periods.iter().enumerate() {
            let mut row = vec![(iv.index + 1).to_string(), (t + 1).to_string()];
            row.extend(padded(&p.loads, n_loads));
            row.extend(padded(&p.generators, n_gens));
            if vlb {
                row.push(format_number(p.intra_charge.unwrap_or(0.0)));
                row.push(format_number(p.inter_discharge_total()));
                row.push(format_number(p.intra_level.unwrap_or(0.0)));
                row.push(format_number(p.inter_level_total()));
            } else {
                row.push(format_number(p.storage_charge));
                row.push(format_number(p.storage_level));
            }
            row.push(format_number(p.price));
            row.push(
                p.price_range
                    .map_or(String::new(), |r| format!("[{}, {}]", format_number(r.lower), format_number(r.upper))),
            );
            table.row(row);
        }
    }
    table
}

fn padded(xs: &[f64], n: usize) -> Vec<String> {
    (0..n).map(|k| xs.get(k).map_or(String::new(), |&x| format_number(x))).collect()
}

fn render_run(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode {}, prices {}", report.mode, report.price_selection);
    out.push('\n');
    dispatch_table(report).render(&mut out);

    if report.mode == Mode::Vlb {
        out.push_str("\nledger\n");
        let mut ledger = Table::new(["MI", "when", "price", "quantity", "born"]);
        for snap in &report.ledger_snapshots {
            for (when, l) in [("before", &snap.before), ("after", &snap.after)] {
                for b in l.iter() {
                    ledger.row(vec![
                        (snap.interval + 1).to_string(),
                        when.to_string(),
                        format_number(b.price),
                        format_number(b.quantity),
                        (b.birth_interval + 1).to_string(),
                    ]);
                }
            }
        }
        ledger.render(&mut out);
    }

    out.push_str("\nsurpluses\n");
    let mut surpluses = Table::new(["MI", "participant", "surplus"]);
    for l in &report.surpluses {
        surpluses.row(vec![(l.interval + 1).to_string(), l.participant.clone(), format_number(l.surplus)]);
    }
    surpluses.render(&mut out);

    out.push_str("\ncycles\n");
    let mut cycles = Table::new(["first MI", "last MI", "storage surplus", "welfare", "cost recovery"]);
    for c in &report.cycles {
        cycles.row(vec![
            (c.start + 1).to_string(),
            (c.end + 1).to_string(),
            format_number(c.storage_surplus),
            format_number(c.social_welfare),
            verdict_name(c).to_string(),
        ]);
    }
    cycles.render(&mut out);

    out.push_str("\ntotals\n");
    let t = &report.totals;
    let mut totals = Table::new(["welfare", "load surplus", "generator surplus", "storage surplus", "final content"]);
    totals.row(vec![
        format_number(t.social_welfare),
        format_number(t.load_surplus),
        format_number(t.generator_surplus),
        format_number(t.storage_surplus),
        format_number(t.final_content),
    ]);
    totals.render(&mut out);
    out
}

fn verdict_name(c: &CycleReport) -> &'static str {
    match c.verdict {
        crate::metrics::Verdict::Pass => "PASS",
        crate::metrics::Verdict::Fail => "FAIL",
        crate::metrics::Verdict::Indeterminate => "INDETERMINATE",
    }
}

fn render_comparison(report: &CompareReport) -> String {
    let mut out = String::new();
    let mut summary = Table::new(["mode", "welfare", "storage surplus", "cost recovery", "error"]);
    for run in &report.runs {
        match &run.outcome {
            ModeOutcome::Report(r) => {
                let verdicts: Vec<&str> = r.cycles.iter().map(verdict_name).collect();
                summary.row(vec![
                    run.mode.to_string(),
                    format_number(r.totals.social_welfare),
                    format_number(r.totals.storage_surplus),
                    verdicts.join(" "),
                    String::new(),
                ]);
            }
            ModeOutcome::Error(e) => {
                summary.row(vec![run.mode.to_string(), String::new(), String::new(), String::new(), e.message.clone()]);
            }
        }
    }
    summary.render(&mut out);
    for run in &report.runs {
        if let ModeOutcome::Report(r) = &run.outcome {
            out.push('\n');
            out.push_str(&render_run(r));
        }
    }
    out
}

/// Serde helper writing non-finite numbers as the strings `"inf"`, `"-inf"`
/// and `"nan"`, which JSON numbers cannot express.
pub mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(serde::de::Error::custom(format!("expected a number, got `{t}`"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::parse_scenario;
    use crate::runner::{run, RunOptions};

    fn vlb_report() -> RunReport {
        let s = parse_scenario(fixtures::TABLE1).unwrap().with_mode(Mode::Vlb);
        run(&s, &RunOptions::default()).unwrap()
    }

    #[test]
    fn structured_report_round_trips() {
        for (_, doc) in fixtures::ALL {
            let s = parse_scenario(doc).unwrap();
            for mode in Mode::ALL {
                let Ok(report) = run(&s.with_mode(mode), &RunOptions::default()) else { continue };
                let text = emit(&report, Format::Structured);
                assert_eq!(parse_structured(&text).unwrap(), report);
            }
        }
    }

    #[test]
    fn structured_report_has_the_documented_keys() {
        let value: serde_json::Value = serde_json::from_str(&emit(&vlb_report(), Format::Structured)).unwrap();
        for key in ["intervals", "ledger_snapshots", "surpluses", "cycles", "totals"] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn vlb_table_has_storage_columns() {
        let text = emit(&vlb_report(), Format::Table);
        let header = text.lines().nth(2).unwrap();
        let columns: Vec<&str> = header.split_whitespace().collect();
        assert_eq!(columns, ["MI", "t", "d", "p1", "p2", "pC", "pDe", "ea", "ee", "λ", "λ", "range"]);
        assert!(text.contains("[5, 9]"), "{text}");
    }

    #[test]
    fn empty_report_prints_headers_only() {
        let mut s = parse_scenario(fixtures::TABLE1).unwrap().with_mode(Mode::SplitEndLevel);
        s.intervals.clear();
        let text = emit(&run(&s, &RunOptions::default()).unwrap(), Format::Table);
        let dispatch: Vec<&str> = text.lines().skip(2).take_while(|l| !l.is_empty()).collect();
        assert_eq!(dispatch.len(), 1);
        assert!(dispatch[0].starts_with("MI"));
    }

    #[test]
    fn numbers_are_trimmed() {
        assert_eq!(format_number(2.5), "2.5");
        assert_eq!(format_number(3.0), "3");
        assert_eq!(format_number(-1e-12), "0");
        assert_eq!(format_number(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn infinite_surplus_survives_json() {
        #[derive(Serialize, Deserialize)]
        struct Wrap(#[serde(with = "extended_float")] f64);
        for x in [f64::INFINITY, f64::NEG_INFINITY, -2.5] {
            let text = serde_json::to_string(&Wrap(x)).unwrap();
            assert_eq!(serde_json::from_str::<Wrap>(&text).unwrap().0, x);
        }
    }
}
