//! Range of a constraint dual over the optimal dual face.
//!
//! With the program in standard form `min c'z, Az = b, z >= 0` and optimum
//! `z*`, the optimal duals are exactly `{y : A'y <= c, b'y = c'z*}`. The
//! extreme values of one coordinate of `y` over that polyhedron are found by
//! minimising and maximising it.

use serde::{Deserialize, Serialize};

use super::standard::StandardForm;
use super::{Comparator, LinearProgram, LpError, LpSolution, LpSolver, LpStatus, RowId, Sense, VarId};

/// Closed interval of valid dual values. Endpoints may be infinite; in
/// serialised form an infinite endpoint is `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "RangeRepr", from = "RangeRepr")]
pub struct PriceRange {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Serialize, Deserialize)]
struct RangeRepr {
    lower: Option<f64>,
    upper: Option<f64>,
}

impl From<PriceRange> for RangeRepr {
    fn from(r: PriceRange) -> Self {
        Self { lower: r.lower.is_finite().then_some(r.lower), upper: r.upper.is_finite().then_some(r.upper) }
    }
}

impl From<RangeRepr> for PriceRange {
    fn from(r: RangeRepr) -> Self {
        Self::new(r.lower.unwrap_or(f64::NEG_INFINITY), r.upper.unwrap_or(f64::INFINITY))
    }
}

impl PriceRange {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn point(value: f64) -> Self {
        Self::new(value, value)
    }

    pub fn contains(&self, value: f64, tol: f64) -> bool {
        value >= self.lower - tol && value <= self.upper + tol
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Divides both endpoints by a positive factor.
    pub fn scaled_down(self, factor: f64) -> Self {
        Self::new(self.lower / factor, self.upper / factor)
    }
}

impl std::fmt::Display for PriceRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{}]", fmt_endpoint(self.lower), fmt_endpoint(self.upper))
    }
}

fn fmt_endpoint(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{}", (v * 1e9).round() / 1e9)
    }
}

pub(crate) fn dual_range_of_row<S: LpSolver + ?Sized>(
    solver: &S,
    lp: &LinearProgram,
    sol: &LpSolution,
    row: RowId,
) -> Result<PriceRange, LpError> {
    if !sol.is_optimal() {
        return Err(LpError::NotOptimal);
    }
    let sf = StandardForm::build(lp).ok_or(LpError::NotOptimal)?;
    let optimum = sf.sign * sol.objective - sf.offset;

    let mut extremes = [0.0; 2];
    for (slot, sense) in [Sense::Minimize, Sense::Maximize].into_iter().enumerate() {
        let aux = optimal_face_program(&sf, optimum, row.0, sense)?;
        let aux_sol = solver.solve(&aux)?;
        extremes[slot] = match aux_sol.status {
            LpStatus::Optimal => aux_sol.objective,
            LpStatus::Unbounded if sense == Sense::Minimize => f64::NEG_INFINITY,
            LpStatus::Unbounded => f64::INFINITY,
            LpStatus::Infeasible => {
                return Err(LpError::NumericalFailure(format!(
                    "optimal dual face of `{}` came out empty",
                    lp.constraints()[row.0].label
                )))
            }
        };
    }

    // Standard-form duals are in minimisation orientation.
    let [lo, hi] = extremes;
    Ok(if sf.sign > 0.0 { PriceRange::new(lo, hi) } else { PriceRange::new(-hi, -lo) })
}

fn optimal_face_program(
    sf: &StandardForm,
    optimum: f64,
    target: usize,
    sense: Sense,
) -> Result<LinearProgram, LpError> {
    let mut aux = LinearProgram::new(sense);
    let ys: Vec<VarId> =
        (0..sf.n_rows()).map(|k| aux.free_variable(format!("y{k}"), if k == target { 1.0 } else { 0.0 })).collect();
    for j in 0..sf.n_cols() {
        let terms = ys.iter().enumerate().map(|(k, &y)| (y, sf.a[k][j]));
        aux.add_constraint(format!("col{j}"), terms, Comparator::Le, sf.c[j])?;
    }
    let terms = ys.iter().zip(&sf.b).map(|(&y, &b)| (y, b));
    aux.add_constraint("optimal", terms, Comparator::Eq, optimum)?;
    Ok(aux)
}
