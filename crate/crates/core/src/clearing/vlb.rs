//! Clearing with virtual linking bids.
//!
//! The storage is split into an intra-storage, which starts empty, may go
//! negative within the interval and must end non-negative, and one
//! inter-storage bucket per ledger entry. Each bucket sells its energy
//! through a virtual bid at the bucket's price.

use crate::lp::{Comparator, LinearProgram, LpStatus, Sense, VarId};
use crate::model::{IntervalSpec, Mode, StorageSpec, ValueLedger, EPS};
use crate::storage_ledger::remove_simultaneous;

use super::{
    add_market_vars, check_interval, check_level, price_of, ClearingError, ClearingOptions, ClearingResult, MarketVars,
    PeriodOutcome,
};

/// Clears one interval against `ledger`, then removes any period where the
/// intra-storage charges while the inter-storage discharges.
pub fn clear_vlb(
    interval: &IntervalSpec,
    storage: &StorageSpec,
    ledger: &ValueLedger,
    opts: &ClearingOptions<'_>,
) -> Result<ClearingResult, ClearingError> {
    let raw = clear_vlb_unprocessed(interval, storage, ledger, opts)?;
    Ok(remove_simultaneous(&raw)?)
}

struct PeriodVars {
    market: MarketVars,
    intra_charge: VarId,
    intra_level: VarId,
    discharge: Vec<VarId>,
    inter_level: Vec<VarId>,
    balance: String,
}

/// The optimal solution of the clearing program exactly as the solver
/// returns it.
pub fn clear_vlb_unprocessed(
    interval: &IntervalSpec,
    storage: &StorageSpec,
    ledger: &ValueLedger,
    opts: &ClearingOptions<'_>,
) -> Result<ClearingResult, ClearingError> {
    check_interval(interval)?;
    check_level("end level", interval.end_level, storage)?;
    check_level("ledger content", ledger.total(), storage)?;
    if let Some(b) = ledger.iter().find(|b| !(b.price > 0.0) || !(b.quantity > 0.0)) {
        return Err(ClearingError::InvalidInput(format!(
            "ledger bucket ({}, {}) must have positive price and quantity",
            b.price, b.quantity
        )));
    }
    let dt = interval.delta_t();
    let buckets = ledger.buckets.clone();

    let mut lp = LinearProgram::new(Sense::Maximize);
    let mut vars: Vec<PeriodVars> = Vec::with_capacity(interval.n_periods());
    for t in 0..interval.n_periods() {
        let market = add_market_vars(&mut lp, interval, &t.to_string(), t);
        let intra_charge = lp.free_variable(format!("pca[{t}]"), 0.0);
        let intra_level = lp.free_variable(format!("ea[{t}]"), 0.0);
        let discharge: Vec<VarId> = buckets
            .iter()
            .enumerate()
            .map(|(v, b)| lp.add_variable(format!("pde[{v},{t}]"), 0.0, f64::INFINITY, -dt * b.price))
            .collect();
        let inter_level: Vec<VarId> =
            (0..buckets.len()).map(|v| lp.add_variable(format!("ee[{v},{t}]"), 0.0, f64::INFINITY, 0.0)).collect();

        let balance = format!("balance[{t}]");
        let terms = market
            .loads
            .iter()
            .map(|&d| (d, 1.0))
            .chain(market.generators.iter().map(|&p| (p, -1.0)))
            .chain([(intra_charge, 1.0)])
            .chain(discharge.iter().map(|&q| (q, -1.0)));
        lp.add_constraint(balance.as_str(), terms, Comparator::Eq, 0.0)?;

        let prev = vars.last();
        let mut terms = vec![(intra_level, 1.0), (intra_charge, -dt)];
        if let Some(prev) = prev {
            terms.push((prev.intra_level, -1.0));
        }
        lp.add_constraint(format!("intra_level[{t}]"), terms, Comparator::Eq, 0.0)?;

        for (v, b) in buckets.iter().enumerate() {
            let mut terms = vec![(inter_level[v], 1.0), (discharge[v], dt)];
            let rhs = match prev {
                Some(prev) => {
                    terms.push((prev.inter_level[v], -1.0));
                    0.0
                }
                None => b.quantity,
            };
            lp.add_constraint(format!("inter_level[{v},{t}]"), terms, Comparator::Eq, rhs)?;
        }

        let content: Vec<(VarId, f64)> =
            std::iter::once((intra_level, 1.0)).chain(inter_level.iter().map(|&e| (e, 1.0))).collect();
        lp.add_constraint(format!("content_min[{t}]"), content.clone(), Comparator::Ge, 0.0)?;
        lp.add_constraint(format!("content_max[{t}]"), content, Comparator::Le, storage.capacity)?;

        vars.push(PeriodVars { market, intra_charge, intra_level, discharge, inter_level, balance });
    }

    let last = vars.last().expect("at least one period");
    lp.add_constraint("intra_final", [(last.intra_level, 1.0)], Comparator::Ge, 0.0)?;
    let content: Vec<(VarId, f64)> =
        std::iter::once((last.intra_level, 1.0)).chain(last.inter_level.iter().map(|&e| (e, 1.0))).collect();
    lp.add_constraint("end_level", content, Comparator::Ge, interval.end_level)?;

    let sol = opts.solve("clearing", &lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(ClearingError::Infeasible {
                requirement: format!("final storage level >= {} MWh", interval.end_level),
            })
        }
        LpStatus::Unbounded => return Err(ClearingError::Unbounded),
    }

    let mut periods = Vec::with_capacity(vars.len());
    for v in &vars {
        let (price, price_range) = price_of(opts, &lp, &sol, &v.balance, dt)?;
        let intra_charge = sol.value(v.intra_charge);
        let inter_discharge: Vec<f64> = v.discharge.iter().map(|&x| snap(sol.value(x))).collect();
        let intra_level = sol.value(v.intra_level);
        let inter_level: Vec<f64> = v.inter_level.iter().map(|&x| snap(sol.value(x))).collect();
        periods.push(PeriodOutcome {
            loads: v.market.loads.iter().map(|&x| sol.value(x)).collect(),
            generators: v.market.generators.iter().map(|&x| sol.value(x)).collect(),
            storage_charge: intra_charge - inter_discharge.iter().sum::<f64>(),
            storage_level: intra_level + inter_level.iter().sum::<f64>(),
            intra_charge: Some(intra_charge),
            inter_discharge,
            intra_level: Some(intra_level),
            inter_level,
            price,
            price_range,
        });
    }

    Ok(ClearingResult {
        mode: Mode::Vlb,
        delta_t: dt,
        initial_content: ledger.total(),
        periods,
        objective: sol.objective,
        buckets,
    })
}

/// Clamps tiny negative round-off on sign-constrained values.
fn snap(x: f64) -> f64 {
    if x.abs() <= EPS {
        0.0
    } else {
        x
    }
}
