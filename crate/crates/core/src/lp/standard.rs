//! Rewriting a general program as `min c'z  s.t.  Az = b, z >= 0`.
//!
//! Rows `0..m_orig` of the standard form correspond one-to-one to the
//! original constraints; finite upper bounds become extra rows after them.
//! Fixed variables get no column and are folded into right-hand sides.

use super::{Comparator, LinearProgram, Sense};

#[derive(Debug, Clone, Copy)]
pub(crate) enum VarMap {
    /// `x = base + z[col]`
    Shifted { col: usize, base: f64 },
    /// `x = base - z[col]`
    Mirrored { col: usize, base: f64 },
    /// `x = z[pos] - z[neg]`
    Split { pos: usize, neg: usize },
    /// `x = value`, with no column.
    Fixed { value: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Minimisation costs.
    pub c: Vec<f64>,
    /// Constant term of the minimisation objective.
    pub offset: f64,
    /// `+1` for a minimisation, `-1` for a maximisation: the original
    /// objective equals `sign * (c'z + offset)`.
    pub sign: f64,
    pub vars: Vec<VarMap>,
}

impl StandardForm {
    /// Returns `None` when some variable has `lower > upper`.
    pub fn build(lp: &LinearProgram) -> Option<Self> {
        let sign = match lp.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };

        let mut n = 0usize;
        let mut vars = Vec::with_capacity(lp.n_vars());
        // (column, width) for each finite-width variable's upper-bound row.
        let mut upper_rows: Vec<(usize, f64)> = Vec::new();
        for v in lp.variables() {
            if v.lower > v.upper {
                return None;
            }
            let map = if v.lower == v.upper {
                vars.push(VarMap::Fixed { value: v.lower });
                continue;
            } else if v.lower.is_finite() {
                if v.upper.is_finite() {
                    upper_rows.push((n, v.upper - v.lower));
                }
                VarMap::Shifted { col: n, base: v.lower }
            } else if v.upper.is_finite() {
                VarMap::Mirrored { col: n, base: v.upper }
            } else {
                n += 1;
                VarMap::Split { pos: n - 1, neg: n }
            };
            n += 1;
            vars.push(map);
        }

        let n_slacks = lp.constraints().iter().filter(|c| c.comparator != Comparator::Eq).count() + upper_rows.len();
        let width = n + n_slacks;
        let m = lp.n_constraints() + upper_rows.len();
        let mut a = vec![vec![0.0; width]; m];
        let mut b = vec![0.0; m];
        let mut slack = n;

        for (i, con) in lp.constraints().iter().enumerate() {
            let mut rhs = con.rhs;
            for &(j, coef) in con.terms() {
                match vars[j] {
                    VarMap::Shifted { col, base } => {
                        a[i][col] += coef;
                        rhs -= coef * base;
                    }
                    VarMap::Mirrored { col, base } => {
                        a[i][col] -= coef;
                        rhs -= coef * base;
                    }
                    VarMap::Split { pos, neg } => {
                        a[i][pos] += coef;
                        a[i][neg] -= coef;
                    }
                    VarMap::Fixed { value } => rhs -= coef * value,
                }
            }
            match con.comparator {
                Comparator::Le => {
                    a[i][slack] = 1.0;
                    slack += 1;
                }
                Comparator::Ge => {
                    a[i][slack] = -1.0;
                    slack += 1;
                }
                Comparator::Eq => {}
            }
            b[i] = rhs;
        }
        for (k, &(col, span)) in upper_rows.iter().enumerate() {
            let i = lp.n_constraints() + k;
            a[i][col] = 1.0;
            a[i][slack] = 1.0;
            slack += 1;
            b[i] = span;
        }

        let mut c = vec![0.0; width];
        let mut offset = 0.0;
        for (v, map) in lp.variables().iter().zip(&vars) {
            let cost = sign * v.cost;
            match *map {
                VarMap::Shifted { col, base } => {
                    c[col] += cost;
                    offset += cost * base;
                }
                VarMap::Mirrored { col, base } => {
                    c[col] -= cost;
                    offset += cost * base;
                }
                VarMap::Split { pos, neg } => {
                    c[pos] += cost;
                    c[neg] -= cost;
                }
                VarMap::Fixed { value } => offset += cost * value,
            }
        }

        Some(Self { a, b, c, offset, sign, vars })
    }

    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    pub fn n_cols(&self) -> usize {
        self.c.len()
    }

    pub fn recover_primal(&self, z: &[f64]) -> Vec<f64> {
        self.vars
            .iter()
            .map(|map| match *map {
                VarMap::Shifted { col, base } => base + z[col],
                VarMap::Mirrored { col, base } => base - z[col],
                VarMap::Split { pos, neg } => z[pos] - z[neg],
                VarMap::Fixed { value } => value,
            })
            .collect()
    }
}
