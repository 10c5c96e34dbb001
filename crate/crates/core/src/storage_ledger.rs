//! Inter-storage bookkeeping between intervals.
//!
//! After a VLB clearing the ledger loses whatever the virtual bids sold and
//! gains whatever the intra-storage holds at the end of the interval. The
//! gained energy is priced by a small valuation program that splits each
//! period's intra charge into a part consumed locally by intra-interval
//! arbitrage and a part moved to the inter-storage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clearing::{ClearingError, ClearingOptions, ClearingResult};
use crate::lp::{Comparator, LinearProgram, LpError, LpStatus, Sense, VarId};
use crate::model::{Mode, ValueBucket, ValueLedger, EPS};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LedgerError {
    #[error("operation expects a VLB clearing result, got {0}")]
    NotVlb(Mode),
    #[error("result was cleared against {result} buckets but the ledger has {ledger}")]
    BucketMismatch { result: usize, ledger: usize },
    #[error("bucket {bucket} would be left with {remaining} MWh")]
    NegativeQuantity { bucket: usize, remaining: f64 },
    #[error("interval has no net charge to value")]
    NoNetCharge,
    #[error("no split of the intra charge keeps the local profit non-negative")]
    ValuationInfeasible,
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
    #[error(transparent)]
    Solver(#[from] LpError),
}

impl From<LedgerError> for ClearingError {
    fn from(e: LedgerError) -> Self {
        match e {
            LedgerError::Solver(e) => ClearingError::Solver(e),
            other => ClearingError::InternalInvariant(other.to_string()),
        }
    }
}

/// Per-period split of the intra charge into local and moved quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationSplit {
    /// MW consumed by arbitrage inside the interval.
    pub local: Vec<f64>,
    /// MW moved to the inter-storage, never negative.
    pub moved: Vec<f64>,
}

impl ValuationSplit {
    /// `-Δt Σ_t λ_t · local_t`.
    pub fn local_profit(&self, prices: &[f64], delta_t: f64) -> f64 {
        -delta_t * self.local.iter().zip(prices).map(|(l, p)| l * p).sum::<f64>()
    }
}

fn require_vlb(result: &ClearingResult) -> Result<(), LedgerError> {
    if result.mode != Mode::Vlb {
        return Err(LedgerError::NotVlb(result.mode));
    }
    Ok(())
}

/// Shifts inter discharge out of periods where the intra-storage charges.
///
/// While some period `τ` both charges the intra-storage and discharges the
/// inter-storage, pick the earliest such `τ` and the earliest period `κ`
/// where the intra-storage discharges, and move `min(Σ_v q_vτ, -pca_κ,
/// pca_τ)` of inter discharge from `τ` to `κ`, taking it from the cheapest
/// buckets first. The intra charge moves the same amount the other way, so
/// every period's net storage instruction is unchanged.
pub fn remove_simultaneous(result: &ClearingResult) -> Result<ClearingResult, LedgerError> {
    require_vlb(result)?;
    let mut out = result.clone();
    let n = out.periods.len();
    let mut order: Vec<usize> = (0..out.buckets.len()).collect();
    order.sort_by(|&a, &b| out.buckets[a].price.total_cmp(&out.buckets[b].price));

    let charge = |p: &crate::clearing::PeriodOutcome| p.intra_charge.unwrap_or(0.0);
    let mut changed = false;
    for _ in 0..=4 * n + 4 {
        let Some(tau) = out.periods.iter().position(|p| charge(p) > EPS && p.inter_discharge_total() > EPS) else {
            if changed {
                out.recompute_levels();
            }
            return Ok(out);
        };
        let Some(kappa) = (0..n).find(|&k| k != tau && charge(&out.periods[k]) < -EPS) else {
            return Err(LedgerError::InternalInvariant(format!(
                "period {tau} charges and discharges the storage but no period discharges the intra-storage"
            )));
        };

        let q =
            out.periods[tau].inter_discharge_total().min(-charge(&out.periods[kappa])).min(charge(&out.periods[tau]));
        let mut remaining = q;
        for &v in &order {
            let take = out.periods[tau].inter_discharge[v].min(remaining);
            if take <= 0.0 {
                continue;
            }
            out.periods[tau].inter_discharge[v] = flush(out.periods[tau].inter_discharge[v] - take);
            out.periods[kappa].inter_discharge[v] += take;
            remaining -= take;
            if remaining <= 0.0 {
                break;
            }
        }
        let moved = q - remaining.max(0.0);
        out.periods[tau].intra_charge = Some(flush(charge(&out.periods[tau]) - moved));
        out.periods[kappa].intra_charge = Some(flush(charge(&out.periods[kappa]) + moved));
        changed = true;
    }
    Err(LedgerError::InternalInvariant("simultaneous charge removal did not terminate".into()))
}

/// Subtracts each bucket's discharge over the interval and drops buckets
/// that are (numerically) empty.
pub fn apply_net_discharge(ledger: &ValueLedger, result: &ClearingResult) -> Result<ValueLedger, LedgerError> {
    require_vlb(result)?;
    if let Some(p) = result.periods.iter().find(|p| p.inter_discharge.len() != ledger.len()) {
        return Err(LedgerError::BucketMismatch { result: p.inter_discharge.len(), ledger: ledger.len() });
    }
    let dt = result.delta_t;
    let mut buckets = Vec::with_capacity(ledger.len());
    for (v, bucket) in ledger.iter().enumerate() {
        let sold: f64 = result.periods.iter().map(|p| dt * p.inter_discharge[v]).sum();
        let remaining = bucket.quantity - sold;
        if remaining < -EPS {
            return Err(LedgerError::NegativeQuantity { bucket: v, remaining });
        }
        if remaining > EPS {
            buckets.push(ValueBucket { quantity: remaining, ..*bucket });
        }
    }
    Ok(ValueLedger::new(buckets))
}

/// Splits the intra charge so that the local profit is as small as possible
/// while staying non-negative. Uses the published point prices.
pub fn assign_charge_values(
    result: &ClearingResult,
    opts: &ClearingOptions<'_>,
) -> Result<ValuationSplit, LedgerError> {
    require_vlb(result)?;
    let dt = result.delta_t;
    if result.final_intra_level() <= EPS {
        return Err(LedgerError::NoNetCharge);
    }

    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut local: Vec<VarId> = Vec::with_capacity(result.n_periods());
    let mut moved: Vec<VarId> = Vec::with_capacity(result.n_periods());
    for (t, p) in result.periods.iter().enumerate() {
        let charge = p.intra_charge.unwrap_or(0.0);
        let cost = -dt * p.price;
        if charge > EPS {
            local.push(lp.add_variable(format!("loc[{t}]"), 0.0, f64::INFINITY, cost));
            moved.push(lp.add_variable(format!("mov[{t}]"), 0.0, f64::INFINITY, 0.0));
        } else {
            let fixed = if charge < -EPS { charge } else { 0.0 };
            local.push(lp.add_variable(format!("loc[{t}]"), fixed, fixed, cost));
            moved.push(lp.add_variable(format!("mov[{t}]"), 0.0, 0.0, 0.0));
        }
    }
    let profit = local.iter().zip(&result.periods).map(|(&l, p)| (l, -dt * p.price));
    lp.add_constraint("local_profit", profit, Comparator::Ge, 0.0)?;
    lp.add_constraint("local_sum", local.iter().map(|&l| (l, 1.0)), Comparator::Eq, 0.0)?;
    for (t, p) in result.periods.iter().enumerate() {
        let charge = p.intra_charge.unwrap_or(0.0);
        if charge > EPS {
            lp.add_constraint(format!("split[{t}]"), [(local[t], 1.0), (moved[t], 1.0)], Comparator::Eq, charge)?;
        }
    }

    let sol = opts.solve("valuation", &lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(ValuationSplit {
            local: local.iter().map(|&x| sol.value(x)).collect(),
            moved: moved.iter().map(|&x| sol.value(x).max(0.0)).collect(),
        }),
        LpStatus::Infeasible => Err(LedgerError::ValuationInfeasible),
        LpStatus::Unbounded => Err(LedgerError::InternalInvariant("valuation program is unbounded".into())),
    }
}

/// Ledger after clearing interval `interval_index`: net discharge is
/// subtracted, then any net charge is added at the prices of the periods it
/// was bought in.
pub fn update_ledger(
    ledger: &ValueLedger,
    result: &ClearingResult,
    interval_index: i64,
    opts: &ClearingOptions<'_>,
) -> Result<ValueLedger, LedgerError> {
    let mut next = apply_net_discharge(ledger, result)?;
    if result.final_intra_level() > EPS {
        let split = assign_charge_values(result, opts)?;
        for (moved, p) in split.moved.iter().zip(&result.periods) {
            if *moved > EPS {
                next.buckets.push(ValueBucket {
                    price: p.price,
                    quantity: result.delta_t * moved,
                    birth_interval: interval_index,
                });
            }
        }
    }
    Ok(next.normalized())
}

/// Multiplies by `1 - rate` the price of every bucket born before
/// `completed_interval`. Call it once after each interval, passing that
/// interval's index, so a bucket keeps its price through the interval after
/// the one it was born in.
pub fn apply_discount(ledger: &ValueLedger, rate: f64, completed_interval: i64) -> ValueLedger {
    let buckets = ledger
        .iter()
        .map(|b| {
            if b.birth_interval < completed_interval {
                ValueBucket { price: b.price * (1.0 - rate), ..*b }
            } else {
                *b
            }
        })
        .collect();
    ValueLedger::new(buckets)
}

fn flush(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        x
    }
}
