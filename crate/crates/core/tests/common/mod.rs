//! Random small instances shared by the property and acceptance suites.

#![allow(dead_code)]

use rand::Rng;
use vlb_clearing::model::{GeneratorBid, LoadBid, TimeGrid};
use vlb_clearing::{IntervalSpec, Mode, Scenario, StorageSpec, ValueBucket, ValueLedger};

/// Size limits of a random instance. Quantities are multiples of 0.5.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub intervals: (usize, usize),
    pub periods: (usize, usize),
    pub loads: (usize, usize),
    pub generators: (usize, usize),
    pub max_quantity: f64,
    pub max_capacity: f64,
    pub delta_ts: &'static [f64],
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            intervals: (1, 4),
            periods: (1, 3),
            loads: (1, 2),
            generators: (1, 2),
            max_quantity: 4.0,
            max_capacity: 5.0,
            delta_ts: &[1.0, 0.5],
        }
    }
}

/// Multiple of 0.5 in `[0, max]`.
pub fn half_grid<R: Rng>(rng: &mut R, max: f64) -> f64 {
    rng.gen_range(0..=(2.0 * max).round() as u32) as f64 * 0.5
}

pub fn random_interval<R: Rng>(rng: &mut R, shape: &Shape, n_periods: usize, delta_t: f64) -> IntervalSpec {
    let loads = (0..rng.gen_range(shape.loads.0..=shape.loads.1))
        .map(|l| LoadBid {
            id: format!("L{}", l + 1),
            utility: (0..n_periods).map(|_| rng.gen_range(4..=30) as f64).collect(),
            max_quantity: (0..n_periods).map(|_| half_grid(rng, shape.max_quantity)).collect(),
        })
        .collect();
    let generators = (0..rng.gen_range(shape.generators.0..=shape.generators.1))
        .map(|g| GeneratorBid {
            id: format!("G{}", g + 1),
            cost: (0..n_periods).map(|_| rng.gen_range(1..=20) as f64).collect(),
            max_quantity: (0..n_periods).map(|_| half_grid(rng, shape.max_quantity)).collect(),
        })
        .collect();
    IntervalSpec {
        grid: TimeGrid { n_periods, delta_t },
        loads,
        generators,
        end_level: 0.0,
        penalty_price: Some(rng.gen_range(0..=10) as f64),
    }
}

/// A scenario with one period length, an empty initial storage and a final
/// end level of zero.
pub fn random_scenario<R: Rng>(rng: &mut R, shape: &Shape, mode: Mode) -> Scenario {
    let capacity = 0.5 + half_grid(rng, shape.max_capacity - 0.5);
    let delta_t = shape.delta_ts[rng.gen_range(0..shape.delta_ts.len())];
    let n = rng.gen_range(shape.intervals.0..=shape.intervals.1);
    let mut intervals: Vec<IntervalSpec> = (0..n)
        .map(|_| {
            let periods = rng.gen_range(shape.periods.0..=shape.periods.1);
            random_interval(rng, shape, periods, delta_t)
        })
        .collect();
    for iv in intervals.iter_mut().take(n - 1) {
        iv.end_level = half_grid(rng, capacity);
    }
    Scenario {
        storage: StorageSpec { capacity, initial_energy: 0.0 },
        intervals,
        mode,
        discount_rate: 0.0,
        initial_ledger: ValueLedger::default(),
    }
}

/// Up to `max_buckets` buckets with positive prices whose content fits in
/// `capacity`.
pub fn random_ledger<R: Rng>(rng: &mut R, max_buckets: usize, capacity: f64) -> ValueLedger {
    let mut room = capacity;
    let mut buckets = Vec::new();
    for _ in 0..rng.gen_range(0..=max_buckets) {
        if room < 0.5 {
            break;
        }
        let quantity = 0.5 + half_grid(rng, (room - 0.5).min(2.0));
        room -= quantity;
        buckets.push(ValueBucket { price: rng.gen_range(1..=25) as f64, quantity, birth_interval: -1 });
    }
    ValueLedger::new(buckets)
}
