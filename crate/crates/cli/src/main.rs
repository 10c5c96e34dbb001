//! `vlb-clear`: clears a scenario document and prints the report.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::Parser;
use vlb_clearing::lp::{to_lp_text, LinearProgram};
use vlb_clearing::model::ScenarioError;
use vlb_clearing::report::{emit, emit_comparison, Format};
use vlb_clearing::runner::{compare, run, FailureClass, LpTag, RunOptions};
use vlb_clearing::{parse_scenario, Mode, PriceSelection};

#[derive(Debug, Parser)]
#[command(name = "vlb-clear", version, about = "Clear an energy market scenario with a non-merchant storage")]
struct Args {
    /// Scenario document (TOML).
    #[arg(long)]
    scenario: PathBuf,

    /// Clearing mode; defaults to the scenario's own mode.
    #[arg(long, conflicts_with = "compare")]
    mode: Option<Mode>,

    /// Comma-separated modes to run side by side.
    #[arg(long, value_delimiter = ',')]
    compare: Option<Vec<Mode>>,

    /// Price used to settle surpluses.
    #[arg(long, default_value = "point")]
    price_selection: PriceSelection,

    /// Skip the price range computation.
    #[arg(long)]
    no_price_ranges: bool,

    /// Write every linear program to this directory in LP format.
    #[arg(long, value_name = "DIR")]
    dump_lp: Option<PathBuf>,

    /// `table` or `structured` (JSON).
    #[arg(long, default_value = "table")]
    format: Format,

    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

const EXIT_OTHER: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

fn exit_code(class: FailureClass) -> u8 {
    match class {
        FailureClass::Validation => EXIT_VALIDATION,
        FailureClass::Infeasible => EXIT_INFEASIBLE,
        FailureClass::Numerical => EXIT_NUMERICAL,
        FailureClass::Other => EXIT_OTHER,
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn execute(args: &Args) -> Result<u8, Failure> {
    if args.no_price_ranges && args.price_selection != PriceSelection::Point {
        return Err(Failure::new(
            EXIT_VALIDATION,
            format!("--price-selection {} needs price ranges", args.price_selection),
        ));
    }
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| Failure::new(EXIT_OTHER, format!("cannot read {}: {e}", args.scenario.display())))?;
    let mut scenario = parse_scenario(&text).map_err(|e| match e {
        ScenarioError::Syntax { .. } | ScenarioError::Invalid(_) => Failure::new(EXIT_VALIDATION, e.to_string()),
    })?;
    if let Some(mode) = args.mode {
        scenario = scenario.with_mode(mode);
    }

    if let Some(dir) = &args.dump_lp {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::new(EXIT_OTHER, format!("cannot create {}: {e}", dir.display())))?;
    }
    let dump_error: Mutex<Option<String>> = Mutex::new(None);
    let sink = |tag: &LpTag<'_>, lp: &LinearProgram| {
        if let Some(dir) = &args.dump_lp {
            if let Err(e) = dump(dir, tag, lp) {
                dump_error.lock().unwrap().get_or_insert(e);
            }
        }
    };
    let opts = RunOptions {
        price_ranges: !args.no_price_ranges,
        price_selection: args.price_selection,
        lp_sink: args.dump_lp.as_ref().map(|_| &sink as _),
        ..RunOptions::default()
    };

    let (document, code) = match &args.compare {
        Some(modes) => {
            let report = compare(&scenario, modes, &opts);
            for run in &report.runs {
                if let vlb_clearing::report::ModeOutcome::Error(e) = &run.outcome {
                    eprintln!("error: {}: {}", run.mode, e.message);
                }
            }
            let code = report.first_error().map_or(0, |e| exit_code(e.class));
            (emit_comparison(&report, args.format), code)
        }
        None => {
            let report = run(&scenario, &opts).map_err(|e| Failure::new(exit_code(e.class()), e.to_string()))?;
            (emit(&report, args.format), 0)
        }
    };
    if let Some(e) = dump_error.into_inner().unwrap() {
        return Err(Failure::new(EXIT_OTHER, e));
    }

    match &args.out {
        Some(path) => std::fs::write(path, document)
            .map_err(|e| Failure::new(EXIT_OTHER, format!("cannot write {}: {e}", path.display())))?,
        None => print!("{document}"),
    }
    Ok(code)
}

fn dump(dir: &Path, tag: &LpTag<'_>, lp: &LinearProgram) -> Result<(), String> {
    let path = dir.join(tag.file_name());
    std::fs::write(&path, to_lp_text(lp)).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
