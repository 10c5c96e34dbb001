use std::collections::HashSet;

use super::{Diagnostic, Mode, Scenario, EPS};

/// Checks every type invariant of a scenario, returning one diagnostic per
/// violation. An empty list means the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Diagnostic> {
    let mut out = Diagnostics::default();
    let cap = s.storage.capacity;

    if !cap.is_finite() || cap < 0.0 {
        out.push("storage.capacity", "capacity must be finite and non-negative");
    }
    let e0 = s.storage.initial_energy;
    if !e0.is_finite() || e0 < -EPS {
        out.push("storage.initial_energy", "initial energy must be finite and non-negative");
    } else if e0 > cap + EPS {
        out.push("storage.initial_energy", "initial energy exceeds capacity");
    }

    if !(0.0..1.0).contains(&s.discount_rate) {
        out.push("discount_rate", "discount rate must lie in [0, 1)");
    }

    for (i, b) in s.initial_ledger.iter().enumerate() {
        let path = format!("initial_ledger[{i}]");
        if !b.price.is_finite() || b.price <= 0.0 {
            out.push(format!("{path}.price"), "bucket price must be strictly positive");
        }
        if !b.quantity.is_finite() || b.quantity <= 0.0 {
            out.push(format!("{path}.quantity"), "bucket quantity must be strictly positive");
        }
    }
    let ledger_total = s.initial_ledger.total();
    if ledger_total > cap + EPS {
        out.push("initial_ledger", "ledger total exceeds storage capacity");
    }

    for (k, iv) in s.intervals.iter().enumerate() {
        let path = format!("intervals[{k}]");
        let n = iv.grid.n_periods;
        if n == 0 {
            out.push(format!("{path}.n_periods"), "an interval needs at least one period");
        }
        if !iv.grid.delta_t.is_finite() || iv.grid.delta_t <= 0.0 {
            out.push(format!("{path}.delta_t"), "period duration must be strictly positive");
        }
        if !iv.end_level.is_finite() || iv.end_level < -EPS || iv.end_level > cap + EPS {
            out.push(format!("{path}.end_level"), "end level must lie within [0, capacity]");
        }
        match iv.penalty_price {
            Some(p) if !p.is_finite() => out.push(format!("{path}.penalty_price"), "penalty price must be finite"),
            None if s.mode == Mode::SplitPenalty => {
                out.push(format!("{path}.penalty_price"), "penalty price is required in split_penalty mode")
            }
            _ => {}
        }

        let mut ids = HashSet::new();
        for (j, l) in iv.loads.iter().enumerate() {
            let lp = format!("{path}.loads[{j}]");
            if !ids.insert(l.id.as_str()) {
                out.push(format!("{lp}.id"), format!("duplicate participant id `{}`", l.id));
            }
            out.check_series(&format!("{lp}.utility"), &l.utility, n, false);
            out.check_series(&format!("{lp}.max"), &l.max_quantity, n, true);
        }
        for (j, g) in iv.generators.iter().enumerate() {
            let gp = format!("{path}.generators[{j}]");
            if !ids.insert(g.id.as_str()) {
                out.push(format!("{gp}.id"), format!("duplicate participant id `{}`", g.id));
            }
            out.check_series(&format!("{gp}.cost"), &g.cost, n, false);
            out.check_series(&format!("{gp}.max"), &g.max_quantity, n, true);
        }
    }

    if s.mode == Mode::Ideal {
        if let Some(first) = s.intervals.first() {
            for (k, iv) in s.intervals.iter().enumerate().skip(1) {
                if (iv.grid.delta_t - first.grid.delta_t).abs() > EPS {
                    out.push(
                        format!("intervals[{k}].delta_t"),
                        "ideal clearing needs one period duration across all intervals",
                    );
                }
            }
        }
    }

    out.0
}

#[derive(Default)]
struct Diagnostics(Vec<Diagnostic>);

impl Diagnostics {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic { path: path.into(), message: message.into() });
    }

    fn check_series(&mut self, path: &str, values: &[f64], n: usize, quantity: bool) {
        if values.len() != n {
            self.push(path, format!("expected {n} values (one per period), found {}", values.len()));
        }
        for (t, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                self.push(format!("{path}[{t}]"), "value must be finite");
            } else if quantity && v < 0.0 {
                self.push(format!("{path}[{t}]"), "quantity must be non-negative");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{parse_scenario, ValueBucket, ValueLedger};

    fn table1() -> Scenario {
        parse_scenario(fixtures::TABLE1).unwrap()
    }

    #[test]
    fn fixture_is_clean() {
        assert!(validate_scenario(&table1()).is_empty());
    }

    #[test]
    fn ledger_over_capacity_is_one_diagnostic() {
        let mut s = table1();
        s.initial_ledger = ValueLedger::new(vec![
            ValueBucket { price: 5.0, quantity: 2.0, birth_interval: -1 },
            ValueBucket { price: 6.0, quantity: 1.0, birth_interval: -1 },
        ]);
        let d = validate_scenario(&s);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].path, "initial_ledger");
    }

    #[test]
    fn zero_bucket_price_is_flagged() {
        let mut s = table1();
        s.initial_ledger = ValueLedger::new(vec![ValueBucket { price: 0.0, quantity: 1.0, birth_interval: -1 }]);
        let d = validate_scenario(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].path, "initial_ledger[0].price");
        assert!(d[0].message.contains("strictly positive"));
    }

    #[test]
    fn array_length_mismatch_is_flagged() {
        let mut s = table1();
        s.intervals[1].generators[0].cost.push(1.0);
        let d = validate_scenario(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].path, "intervals[1].generators[0].cost");
    }

    #[test]
    fn penalty_price_required_only_in_penalty_mode() {
        let mut s = table1();
        s.intervals[0].penalty_price = None;
        assert!(validate_scenario(&s).is_empty());
        s.mode = Mode::SplitPenalty;
        let d = validate_scenario(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].path, "intervals[0].penalty_price");
    }

    #[test]
    fn ideal_needs_shared_period_length() {
        let mut s = table1().with_mode(Mode::Ideal);
        assert!(validate_scenario(&s).is_empty());
        s.intervals[1].grid.delta_t = 0.5;
        assert_eq!(validate_scenario(&s).len(), 1);
    }
}
