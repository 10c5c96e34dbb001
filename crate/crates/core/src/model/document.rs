//! On-disk layout of a scenario document.

use serde::{Deserialize, Serialize};

use super::{GeneratorBid, IntervalSpec, LoadBid, Mode, Scenario, StorageSpec, TimeGrid, ValueBucket, ValueLedger};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct ScenarioDoc {
    mode: Mode,
    #[serde(default)]
    discount_rate: f64,
    storage: StorageDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    initial_ledger: Vec<ValueBucket>,
    #[serde(default)]
    intervals: Vec<IntervalDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StorageDoc {
    capacity: f64,
    #[serde(default)]
    initial_energy: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalDoc {
    delta_t: f64,
    n_periods: usize,
    end_level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    penalty_price: Option<f64>,
    #[serde(default)]
    loads: Vec<LoadDoc>,
    #[serde(default)]
    generators: Vec<GeneratorDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadDoc {
    id: String,
    utility: Vec<f64>,
    max: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorDoc {
    id: String,
    cost: Vec<f64>,
    max: Vec<f64>,
}

impl From<ScenarioDoc> for Scenario {
    fn from(doc: ScenarioDoc) -> Self {
        Scenario {
            storage: StorageSpec { capacity: doc.storage.capacity, initial_energy: doc.storage.initial_energy },
            intervals: doc
                .intervals
                .into_iter()
                .map(|iv| IntervalSpec {
                    grid: TimeGrid { n_periods: iv.n_periods, delta_t: iv.delta_t },
                    loads: iv
                        .loads
                        .into_iter()
                        .map(|l| LoadBid { id: l.id, utility: l.utility, max_quantity: l.max })
                        .collect(),
                    generators: iv
                        .generators
                        .into_iter()
                        .map(|g| GeneratorBid { id: g.id, cost: g.cost, max_quantity: g.max })
                        .collect(),
                    end_level: iv.end_level,
                    penalty_price: iv.penalty_price,
                })
                .collect(),
            mode: doc.mode,
            discount_rate: doc.discount_rate,
            initial_ledger: ValueLedger::new(doc.initial_ledger),
        }
    }
}

impl From<&Scenario> for ScenarioDoc {
    fn from(s: &Scenario) -> Self {
        ScenarioDoc {
            mode: s.mode,
            discount_rate: s.discount_rate,
            storage: StorageDoc { capacity: s.storage.capacity, initial_energy: s.storage.initial_energy },
            initial_ledger: s.initial_ledger.buckets.clone(),
            intervals: s
                .intervals
                .iter()
                .map(|iv| IntervalDoc {
                    delta_t: iv.grid.delta_t,
                    n_periods: iv.grid.n_periods,
                    end_level: iv.end_level,
                    penalty_price: iv.penalty_price,
                    loads: iv
                        .loads
                        .iter()
                        .map(|l| LoadDoc { id: l.id.clone(), utility: l.utility.clone(), max: l.max_quantity.clone() })
                        .collect(),
                    generators: iv
                        .generators
                        .iter()
                        .map(|g| GeneratorDoc { id: g.id.clone(), cost: g.cost.clone(), max: g.max_quantity.clone() })
                        .collect(),
                })
                .collect(),
        }
    }
}
