//! Clearing with a single physical storage level.

use crate::lp::{Comparator, LinearProgram, LpStatus, Sense, VarId};
use crate::model::{IntervalSpec, Mode, StorageSpec};

use super::{
    add_market_vars, check_interval, check_level, price_of, ClearingError, ClearingOptions, ClearingResult, MarketVars,
    PeriodOutcome,
};

#[derive(Debug, Clone, Copy)]
enum EndCondition {
    Level(f64),
    Penalty(f64),
}

/// Clears all intervals in one program. The end level of the last interval
/// is imposed on the final period; other end levels are ignored.
pub fn clear_ideal(
    storage: &StorageSpec,
    intervals: &[IntervalSpec],
    opts: &ClearingOptions<'_>,
) -> Result<ClearingResult, ClearingError> {
    let Some(last) = intervals.last() else {
        return Err(ClearingError::InvalidInput("ideal clearing needs at least one interval".into()));
    };
    let dt = intervals[0].delta_t();
    if intervals.iter().any(|i| i.delta_t() != dt) {
        return Err(ClearingError::InvalidInput("ideal clearing needs one period length across all intervals".into()));
    }
    clear_classic(Mode::Ideal, intervals, storage, storage.initial_energy, EndCondition::Level(last.end_level), opts)
}

/// Clears one interval with its end level imposed as an equality.
pub fn clear_split(
    interval: &IntervalSpec,
    storage: &StorageSpec,
    e_init: f64,
    opts: &ClearingOptions<'_>,
) -> Result<ClearingResult, ClearingError> {
    clear_classic(
        Mode::SplitEndLevel,
        std::slice::from_ref(interval),
        storage,
        e_init,
        EndCondition::Level(interval.end_level),
        opts,
    )
}

/// Clears one interval with `penalty_price · e_T` subtracted from the
/// objective and no end-level constraint.
pub fn clear_split_penalty(
    interval: &IntervalSpec,
    storage: &StorageSpec,
    e_init: f64,
    opts: &ClearingOptions<'_>,
) -> Result<ClearingResult, ClearingError> {
    let penalty = interval
        .penalty_price
        .ok_or_else(|| ClearingError::InvalidInput("penalty clearing needs a penalty price".into()))?;
    clear_classic(
        Mode::SplitPenalty,
        std::slice::from_ref(interval),
        storage,
        e_init,
        EndCondition::Penalty(penalty),
        opts,
    )
}

struct PeriodVars {
    market: MarketVars,
    charge: VarId,
    level: VarId,
    balance: String,
}

fn clear_classic(
    mode: Mode,
    intervals: &[IntervalSpec],
    storage: &StorageSpec,
    e_init: f64,
    end: EndCondition,
    opts: &ClearingOptions<'_>,
) -> Result<ClearingResult, ClearingError> {
    for spec in intervals {
        check_interval(spec)?;
    }
    check_level("initial storage level", e_init, storage)?;
    if let EndCondition::Level(e_end) = end {
        check_level("end level", e_end, storage)?;
    }
    let dt = intervals[0].delta_t();

    let mut lp = LinearProgram::new(Sense::Maximize);
    let mut vars: Vec<PeriodVars> = Vec::new();
    let mut previous_level: Option<VarId> = None;
    for (i, spec) in intervals.iter().enumerate() {
        for t in 0..spec.n_periods() {
            let tag = format!("{i}.{t}");
            let market = add_market_vars(&mut lp, spec, &tag, t);
            let charge = lp.free_variable(format!("pc[{tag}]"), 0.0);
            let level = lp.add_variable(format!("e[{tag}]"), 0.0, storage.capacity, 0.0);

            let balance = format!("balance[{tag}]");
            let terms = market
                .loads
                .iter()
                .map(|&d| (d, 1.0))
                .chain(market.generators.iter().map(|&p| (p, -1.0)))
                .chain([(charge, 1.0)]);
            lp.add_constraint(balance.as_str(), terms, Comparator::Eq, 0.0)?;

            let mut terms = vec![(level, 1.0), (charge, -dt)];
            let rhs = match previous_level {
                Some(prev) => {
                    terms.push((prev, -1.0));
                    0.0
                }
                None => e_init,
            };
            lp.add_constraint(format!("level[{tag}]"), terms, Comparator::Eq, rhs)?;
            previous_level = Some(level);
            vars.push(PeriodVars { market, charge, level, balance });
        }
    }

    let final_level = vars.last().expect("at least one period").level;
    let requirement = match end {
        EndCondition::Level(e_end) => {
            lp.add_constraint("end_level", [(final_level, 1.0)], Comparator::Eq, e_end)?;
            format!("final storage level = {e_end} MWh")
        }
        EndCondition::Penalty(s_end) => {
            lp.set_cost(final_level, -s_end);
            "storage operating limits".to_string()
        }
    };

    let sol = opts.solve("clearing", &lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(ClearingError::Infeasible { requirement }),
        LpStatus::Unbounded => return Err(ClearingError::Unbounded),
    }

    let mut periods = Vec::with_capacity(vars.len());
    for v in &vars {
        let (price, price_range) = price_of(opts, &lp, &sol, &v.balance, dt)?;
        periods.push(PeriodOutcome {
            loads: v.market.loads.iter().map(|&x| sol.value(x)).collect(),
            generators: v.market.generators.iter().map(|&x| sol.value(x)).collect(),
            storage_charge: sol.value(v.charge),
            storage_level: sol.value(v.level),
            intra_charge: None,
            inter_discharge: Vec::new(),
            intra_level: None,
            inter_level: Vec::new(),
            price,
            price_range,
        });
    }

    Ok(ClearingResult {
        mode,
        delta_t: dt,
        initial_content: e_init,
        periods,
        objective: sol.objective,
        buckets: Vec::new(),
    })
}
