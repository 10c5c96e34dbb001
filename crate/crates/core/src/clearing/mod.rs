//! Clearing formulations: ideal (whole horizon), split with an end-level
//! equality, split with a final-level penalty, and virtual linking bids.
//!
//! Every formulation maximises `Δt Σ_t (Σ_l U d - Σ_g C p)` (plus a
//! mode-specific term) subject to a per-period balance row. The price of a
//! period is the dual of its balance row divided by `Δt`, so prices are in
//! money per MWh whatever the period length.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{DenseSimplex, LinearProgram, LpError, LpSolution, LpSolver, PriceRange, VarId};
use crate::model::{IntervalSpec, Mode, StorageSpec, ValueBucket, ValueLedger, EPS};

mod classic;
mod vlb;

pub use classic::{clear_ideal, clear_split, clear_split_penalty};
pub use vlb::{clear_vlb, clear_vlb_unprocessed};

/// Callback receiving every program before it is solved, with a short name
/// (`"clearing"` or `"valuation"`).
pub type LpObserver<'a> = &'a (dyn Fn(&str, &LinearProgram) + Sync);

static REFERENCE_SOLVER: DenseSimplex = DenseSimplex;

#[derive(Clone, Copy)]
pub struct ClearingOptions<'a> {
    pub solver: &'a dyn LpSolver,
    /// Compute the price range of every period (two auxiliary programs each).
    pub price_ranges: bool,
    pub observer: Option<LpObserver<'a>>,
}

impl Default for ClearingOptions<'static> {
    fn default() -> Self {
        Self { solver: &REFERENCE_SOLVER, price_ranges: true, observer: None }
    }
}

impl ClearingOptions<'_> {
    pub(crate) fn solve(&self, name: &str, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        if let Some(observe) = self.observer {
            observe(name, lp);
        }
        self.solver.solve(lp)
    }
}

impl std::fmt::Debug for ClearingOptions<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClearingOptions")
            .field("price_ranges", &self.price_ranges)
            .field("observer", &self.observer.is_some())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ClearingError {
    #[error("clearing is infeasible: cannot satisfy {requirement}")]
    Infeasible { requirement: String },
    #[error("clearing program is unbounded")]
    Unbounded,
    #[error("invalid clearing input: {0}")]
    InvalidInput(String),
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
    #[error(transparent)]
    Solver(#[from] LpError),
}

/// Dispatch, storage and price of one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    /// Accepted consumption per load, MW, in bid order.
    pub loads: Vec<f64>,
    /// Accepted production per generator, MW, in bid order.
    pub generators: Vec<f64>,
    /// Net power into the storage, MW (negative when discharging). For VLB
    /// this is the intra charge minus the summed inter discharge.
    pub storage_charge: f64,
    /// Total storage content at the end of the period, MWh.
    pub storage_level: f64,
    /// VLB only: intra-storage charge, MW.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intra_charge: Option<f64>,
    /// VLB only: discharge of each inter-storage bucket, MW.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inter_discharge: Vec<f64>,
    /// VLB only: intra-storage level, MWh. May be negative before the end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intra_level: Option<f64>,
    /// VLB only: level of each inter-storage bucket, MWh.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inter_level: Vec<f64>,
    /// Published price, money per MWh.
    pub price: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_range: Option<PriceRange>,
}

impl PeriodOutcome {
    pub fn inter_discharge_total(&self) -> f64 {
        self.inter_discharge.iter().sum()
    }

    pub fn inter_level_total(&self) -> f64 {
        self.inter_level.iter().sum()
    }
}

/// Outcome of one clearing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingResult {
    pub mode: Mode,
    pub delta_t: f64,
    /// Storage content before the first period, MWh.
    pub initial_content: f64,
    pub periods: Vec<PeriodOutcome>,
    /// Optimal objective of the clearing program.
    pub objective: f64,
    /// VLB only: the ledger buckets the interval was cleared against, in the
    /// order used by `inter_discharge` and `inter_level`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buckets: Vec<ValueBucket>,
}

impl ClearingResult {
    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }

    /// Storage content after the last period, MWh.
    pub fn final_content(&self) -> f64 {
        self.periods.last().map_or(self.initial_content, |p| p.storage_level)
    }

    /// VLB only: intra-storage level after the last period.
    pub fn final_intra_level(&self) -> f64 {
        self.periods.last().and_then(|p| p.intra_level).unwrap_or(0.0)
    }

    /// `Δt Σ_t (Σ_l U d - Σ_g C p)` over the given bids, which must be the
    /// ones this result was cleared against, period for period.
    pub fn welfare<'a>(&self, periods: impl IntoIterator<Item = (&'a IntervalSpec, usize)>) -> f64 {
        self.periods.iter().zip(periods).map(|(out, (spec, t))| self.delta_t * period_welfare(spec, t, out)).sum()
    }

    /// Cuts a whole-horizon result into one result per interval. Each piece's
    /// objective is its own welfare.
    pub fn split_by_interval(&self, intervals: &[IntervalSpec]) -> Vec<ClearingResult> {
        let mut pieces = Vec::with_capacity(intervals.len());
        let mut start = 0;
        let mut content = self.initial_content;
        for spec in intervals {
            let end = (start + spec.n_periods()).min(self.periods.len());
            let mut piece = ClearingResult {
                mode: self.mode,
                delta_t: self.delta_t,
                initial_content: content,
                periods: self.periods[start..end].to_vec(),
                objective: 0.0,
                buckets: Vec::new(),
            };
            piece.objective = piece.welfare((0..spec.n_periods()).map(|t| (spec, t)));
            content = piece.final_content();
            pieces.push(piece);
            start = end;
        }
        pieces
    }

    /// Rebuilds the level columns from the initial content and the charge
    /// columns.
    pub(crate) fn recompute_levels(&mut self) {
        let dt = self.delta_t;
        let mut total = self.initial_content;
        let mut intra = 0.0;
        let mut inter: Vec<f64> = self.buckets.iter().map(|b| b.quantity).collect();
        for p in &mut self.periods {
            total += dt * p.storage_charge;
            p.storage_level = total;
            if let Some(c) = p.intra_charge {
                intra += dt * c;
                p.intra_level = Some(intra);
                for (level, q) in inter.iter_mut().zip(&p.inter_discharge) {
                    *level -= dt * q;
                }
                p.inter_level = inter.clone();
                p.storage_level = intra + inter.iter().sum::<f64>();
            }
        }
    }
}

/// `Σ_l U d - Σ_g C p` in period `t` of `spec`.
pub fn period_welfare(spec: &IntervalSpec, t: usize, out: &PeriodOutcome) -> f64 {
    let utility: f64 = spec.loads.iter().zip(&out.loads).map(|(l, d)| l.utility[t] * d).sum();
    let cost: f64 = spec.generators.iter().zip(&out.generators).map(|(g, p)| g.cost[t] * p).sum();
    utility - cost
}

/// Clears `interval` under `mode` from the given storage state. Ideal mode
/// clears the single interval on its own.
pub fn clear_interval(
    mode: Mode,
    interval: &IntervalSpec,
    storage: &StorageSpec,
    e_init: f64,
    ledger: &ValueLedger,
    opts: &ClearingOptions<'_>,
) -> Result<ClearingResult, ClearingError> {
    match mode {
        Mode::Ideal => clear_ideal(storage, std::slice::from_ref(interval), opts),
        Mode::SplitEndLevel => clear_split(interval, storage, e_init, opts),
        Mode::SplitPenalty => clear_split_penalty(interval, storage, e_init, opts),
        Mode::Vlb => clear_vlb(interval, storage, ledger, opts),
    }
}

/// Market variables of one period.
pub(crate) struct MarketVars {
    pub loads: Vec<VarId>,
    pub generators: Vec<VarId>,
}

/// Adds load and generator variables for period `t` of `spec`, with
/// objective coefficients scaled by `Δt`.
pub(crate) fn add_market_vars(lp: &mut LinearProgram, spec: &IntervalSpec, tag: &str, t: usize) -> MarketVars {
    let dt = spec.delta_t();
    let loads = spec
        .loads
        .iter()
        .map(|l| lp.add_variable(format!("d[{},{tag}]", l.id), 0.0, l.max_quantity[t], dt * l.utility[t]))
        .collect();
    let generators = spec
        .generators
        .iter()
        .map(|g| lp.add_variable(format!("p[{},{tag}]", g.id), 0.0, g.max_quantity[t], -dt * g.cost[t]))
        .collect();
    MarketVars { loads, generators }
}

pub(crate) fn check_interval(spec: &IntervalSpec) -> Result<(), ClearingError> {
    let t = spec.n_periods();
    if t == 0 || !(spec.delta_t() > 0.0) {
        return Err(ClearingError::InvalidInput("an interval needs at least one period of positive length".into()));
    }
    let lengths_ok = spec.loads.iter().all(|l| l.utility.len() == t && l.max_quantity.len() == t)
        && spec.generators.iter().all(|g| g.cost.len() == t && g.max_quantity.len() == t);
    if !lengths_ok {
        return Err(ClearingError::InvalidInput("per-period bid arrays must have one entry per period".into()));
    }
    Ok(())
}

pub(crate) fn check_level(what: &str, level: f64, storage: &StorageSpec) -> Result<(), ClearingError> {
    if level < -EPS || level > storage.capacity + EPS {
        return Err(ClearingError::InvalidInput(format!("{what} {level} MWh is outside [0, {}]", storage.capacity)));
    }
    Ok(())
}

/// Point price and optional range of a balance row, in money per MWh.
pub(crate) fn price_of(
    opts: &ClearingOptions<'_>,
    lp: &LinearProgram,
    sol: &LpSolution,
    label: &str,
    delta_t: f64,
) -> Result<(f64, Option<PriceRange>), ClearingError> {
    let dual = sol.dual_by_label(lp, label).ok_or_else(|| LpError::UnknownLabel(label.to_string()))?;
    let price = dual / delta_t;
    let range = if opts.price_ranges {
        let r = opts.solver.dual_range(lp, sol, label)?.scaled_down(delta_t);
        // Endpoints within round-off of the point price are snapped to it.
        let snap = |x: f64| if (x - price).abs() <= 1e-9 * (1.0 + price.abs()) { price } else { x };
        Some(PriceRange::new(snap(r.lower), snap(r.upper)))
    } else {
        None
    };
    Ok((price, range))
}
