//! Small dense linear programs: construction, solution with duals, and
//! exploration of the optimal dual face.
//!
//! Dual values follow the shadow-price convention: the dual of a constraint is
//! the rate of change of the optimal objective (in the program's own sense)
//! per unit increase of its right-hand side. For a maximisation this makes the
//! dual of a binding `<=` row non-negative and of a binding `>=` row
//! non-positive.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

mod certificate;
mod dual_range;
mod simplex;
mod standard;
mod text;

pub use certificate::{certify, Certificate};
pub use dual_range::PriceRange;
pub use text::to_lp_text;

/// Tolerance for feasibility, optimality and duality checks.
pub const EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ge => ">=",
        })
    }
}

/// Index of a variable in its [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Index of a constraint in its [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Objective coefficient.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub label: String,
    terms: Vec<(usize, f64)>,
    pub comparator: Comparator,
    pub rhs: f64,
}

impl Constraint {
    /// Non-zero coefficients as `(variable index, coefficient)`, sorted by index.
    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    sense: Sense,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    labels: HashMap<String, usize>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self { sense, variables: Vec::new(), constraints: Vec::new(), labels: HashMap::new() }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Adds a variable with bounds `lower <= x <= upper` (either may be
    /// infinite) and objective coefficient `cost`.
    pub fn add_variable(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        self.variables.push(Variable { name: name.into(), lower, upper, cost });
        VarId(self.variables.len() - 1)
    }

    pub fn free_variable(&mut self, name: impl Into<String>, cost: f64) -> VarId {
        self.add_variable(name, f64::NEG_INFINITY, f64::INFINITY, cost)
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.variables[var.0].cost = cost;
    }

    /// Adds a labelled constraint. Repeated variables in `terms` are summed.
    pub fn add_constraint(
        &mut self,
        label: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        comparator: Comparator,
        rhs: f64,
    ) -> Result<RowId, LpError> {
        let label = label.into();
        if self.labels.contains_key(&label) {
            return Err(LpError::DuplicateLabel(label));
        }
        let mut dense: Vec<(usize, f64)> = Vec::new();
        for (VarId(j), a) in terms {
            if j >= self.variables.len() {
                return Err(LpError::Malformed(format!("constraint `{label}` references unknown variable {j}")));
            }
            match dense.iter_mut().find(|(k, _)| *k == j) {
                Some((_, coef)) => *coef += a,
                None => dense.push((j, a)),
            }
        }
        dense.retain(|&(_, a)| a != 0.0);
        dense.sort_by_key(|&(j, _)| j);
        self.labels.insert(label.clone(), self.constraints.len());
        self.constraints.push(Constraint { label, terms: dense, comparator, rhs });
        Ok(RowId(self.constraints.len() - 1))
    }

    pub fn constraint_id(&self, label: &str) -> Option<RowId> {
        self.labels.get(label).copied().map(RowId)
    }

    /// Row `i` as a dense vector over all variables.
    pub fn row(&self, i: RowId) -> Vec<f64> {
        let mut row = vec![0.0; self.variables.len()];
        for &(j, a) in &self.constraints[i.0].terms {
            row[j] = a;
        }
        row
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables.iter().zip(x).map(|(v, xi)| v.cost * xi).sum()
    }

    fn check_well_formed(&self) -> Result<(), LpError> {
        for v in &self.variables {
            if !v.cost.is_finite() || v.lower.is_nan() || v.upper.is_nan() {
                return Err(LpError::Malformed(format!("variable `{}` has a non-finite cost or NaN bound", v.name)));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("variable `{}` has an unsatisfiable infinite bound", v.name)));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() || c.terms.iter().any(|(_, a)| !a.is_finite()) {
                return Err(LpError::Malformed(format!("constraint `{}` has non-finite data", c.label)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values, one per variable. Empty unless optimal.
    pub primal: Vec<f64>,
    /// Constraint duals in shadow-price convention, one per constraint.
    pub duals: Vec<f64>,
    /// `cost_j - sum_i a_ij * dual_i` for every variable.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Residuals of the optimality conditions, measured on the original program.
    pub certificate: Certificate,
}

impl LpSolution {
    fn without_solution(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            objective: f64::NAN,
            iterations,
            certificate: Certificate::default(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.primal[var.0]
    }

    pub fn dual(&self, row: RowId) -> f64 {
        self.duals[row.0]
    }

    pub fn dual_by_label(&self, lp: &LinearProgram, label: &str) -> Option<f64> {
        lp.constraint_id(label).map(|r| self.dual(r))
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("duplicate constraint label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown constraint label `{0}`")]
    UnknownLabel(String),
    #[error("operation requires an optimal solution")]
    NotOptimal,
}

/// A backend able to solve a [`LinearProgram`].
///
/// [`DenseSimplex`] is the reference implementation; any replacement must
/// return duals in the same convention.
pub trait LpSolver: Send + Sync {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError>;

    /// Smallest and largest value the dual of `label` takes over all optimal
    /// dual solutions of `lp`. Each endpoint is found with one auxiliary LP
    /// over the optimal dual face.
    fn dual_range(&self, lp: &LinearProgram, sol: &LpSolution, label: &str) -> Result<PriceRange, LpError> {
        let row = lp.constraint_id(label).ok_or_else(|| LpError::UnknownLabel(label.to_string()))?;
        dual_range::dual_range_of_row(self, lp, sol, row)
    }
}

/// Two-phase dense tableau simplex with Bland's rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSimplex;

impl LpSolver for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        lp.check_well_formed()?;
        let Some(sf) = standard::StandardForm::build(lp) else {
            return Ok(LpSolution::without_solution(LpStatus::Infeasible, 0));
        };
        let cap = 50 * (sf.n_cols() + sf.n_rows()).max(1);
        let (outcome, iterations) = simplex::solve_standard(&sf, cap)?;
        let (z, y_std) = match outcome {
            simplex::Outcome::Optimal { z, y } => (z, y),
            simplex::Outcome::Infeasible => return Ok(LpSolution::without_solution(LpStatus::Infeasible, iterations)),
            simplex::Outcome::Unbounded => return Ok(LpSolution::without_solution(LpStatus::Unbounded, iterations)),
        };

        let primal = sf.recover_primal(&z);
        let duals: Vec<f64> = y_std[..lp.n_constraints()].iter().map(|y| clean(sf.sign * y)).collect();
        let reduced_costs = reduced_costs(lp, &duals);
        let mut sol = LpSolution {
            status: LpStatus::Optimal,
            objective: lp.objective_value(&primal),
            primal,
            duals,
            reduced_costs,
            iterations,
            certificate: Certificate::default(),
        };
        sol.certificate = certify(lp, &sol);
        if !sol.certificate.holds(EPS) {
            return Err(LpError::NumericalFailure(format!("optimality certificate failed: {:?}", sol.certificate)));
        }
        Ok(sol)
    }
}

/// Solves with the reference backend.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    DenseSimplex.solve(lp)
}

/// [`LpSolver::dual_range`] on the reference backend.
pub fn dual_range(lp: &LinearProgram, sol: &LpSolution, label: &str) -> Result<PriceRange, LpError> {
    DenseSimplex.dual_range(lp, sol, label)
}

pub(crate) fn reduced_costs(lp: &LinearProgram, duals: &[f64]) -> Vec<f64> {
    let mut r: Vec<f64> = lp.variables.iter().map(|v| v.cost).collect();
    for (c, y) in lp.constraints.iter().zip(duals) {
        for &(j, a) in &c.terms {
            r[j] -= a * y;
        }
    }
    r
}

/// Flushes round-off noise to zero.
fn clean(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        x
    }
}
