use super::{Comparator, LinearProgram, LpSolution, Sense};

/// Largest violations of the optimality conditions of a solved program.
///
/// All four are measured on the original (not the standard-form) program.
/// `duality_gap` is relative: `|primal - dual| / (1 + |primal|)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Certificate {
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub complementarity: f64,
    pub duality_gap: f64,
}

impl Certificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.primal_infeasibility <= tol
            && self.dual_infeasibility <= tol
            && self.complementarity <= tol
            && self.duality_gap <= tol
    }
}

/// Recomputes the optimality residuals of `sol` from scratch.
pub fn certify(lp: &LinearProgram, sol: &LpSolution) -> Certificate {
    let x = &sol.primal;
    // Work in minimisation orientation: costs and duals times `s`.
    let s = match lp.sense() {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cert = Certificate::default();
    let bump = |slot: &mut f64, v: f64| {
        if v > *slot || v.is_nan() {
            *slot = v;
        }
    };

    let mut dual_objective = 0.0;
    for (con, &dual) in lp.constraints().iter().zip(&sol.duals) {
        let y = s * dual;
        let slack = con.rhs - con.activity(x);
        let (viol, sign_viol) = match con.comparator {
            Comparator::Le => ((-slack).max(0.0), y.max(0.0)),
            Comparator::Ge => (slack.max(0.0), (-y).max(0.0)),
            Comparator::Eq => (slack.abs(), 0.0),
        };
        bump(&mut cert.primal_infeasibility, viol);
        bump(&mut cert.dual_infeasibility, sign_viol);
        if con.comparator != Comparator::Eq {
            bump(&mut cert.complementarity, (y * slack).abs());
        }
        dual_objective += y * con.rhs;
    }

    for ((v, &xj), &rc) in lp.variables().iter().zip(x).zip(&sol.reduced_costs) {
        let r = s * rc;
        bump(&mut cert.primal_infeasibility, (v.lower - xj).max(0.0));
        bump(&mut cert.primal_infeasibility, (xj - v.upper).max(0.0));
        // A positive reduced cost needs an active lower bound, a negative one
        // an active upper bound.
        if r > 0.0 {
            if v.lower.is_finite() {
                bump(&mut cert.complementarity, r * (xj - v.lower).abs());
                dual_objective += r * v.lower;
            } else {
                bump(&mut cert.dual_infeasibility, r);
            }
        } else if r < 0.0 {
            if v.upper.is_finite() {
                bump(&mut cert.complementarity, -r * (v.upper - xj).abs());
                dual_objective += r * v.upper;
            } else {
                bump(&mut cert.dual_infeasibility, -r);
            }
        }
    }

    let primal_objective = s * lp.objective_value(x);
    cert.duality_gap = (primal_objective - dual_objective).abs() / (1.0 + primal_objective.abs());
    cert
}
