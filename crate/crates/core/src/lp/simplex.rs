//! Two-phase tableau simplex on a [`StandardForm`].
//!
//! Every row gets an artificial column. Phase one minimises their sum; phase
//! two minimises the real costs with artificial columns barred from entering.
//! Pivoting follows Bland's rule (lowest-index entering column, lowest-index
//! basic variable among tied ratios), so the path is fully determined by the
//! input.
//!
//! Duals are read off the artificial columns at the end: for the basis matrix
//! `B`, column `n + k` of the tableau holds `B^-1 e_k`, so
//! `y_k = c_B' B^-1 e_k` is a dot product with the basic costs.

use super::standard::StandardForm;
use super::LpError;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

pub(crate) enum Outcome {
    Optimal { z: Vec<f64>, y: Vec<f64> },
    Infeasible,
    Unbounded,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Tableau {
    /// Each row: `n + m` coefficients followed by the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Structural plus slack columns; artificials follow.
    n: usize,
    iterations: usize,
    cap: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        *self.rows[i].last().unwrap()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
                let last = row.len() - 1;
                if row[last].abs() < 1e-12 {
                    row[last] = 0.0;
                }
            }
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        cost[j] - self.rows.iter().zip(&self.basis).map(|(row, &bi)| cost[bi] * row[j]).sum::<f64>()
    }

    /// Runs simplex iterations over columns `0..allowed` until optimal or
    /// unbounded.
    fn run(&mut self, cost: &[f64], allowed: usize) -> Result<PhaseEnd, LpError> {
        loop {
            let entering =
                (0..allowed).filter(|j| !self.basis.contains(j)).find(|&j| self.reduced_cost(cost, j) < -COST_TOL);
            let Some(c) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if ratio < best && !tie || tie && self.basis[i] < self.basis[k] {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };

            self.pivot(r, c);
            self.iterations += 1;
            if self.iterations > self.cap {
                return Err(LpError::NumericalFailure(format!("simplex exceeded its iteration cap of {}", self.cap)));
            }
        }
    }
}

/// Returns the outcome and the number of pivots performed.
pub(crate) fn solve_standard(sf: &StandardForm, cap: usize) -> Result<(Outcome, usize), LpError> {
    let m = sf.n_rows();
    let n = sf.n_cols();
    let width = n + m + 1;

    let mut row_sign = vec![1.0; m];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let s = if sf.b[i] < 0.0 { -1.0 } else { 1.0 };
        row_sign[i] = s;
        let mut row = vec![0.0; width];
        for (r, a) in row.iter_mut().zip(&sf.a[i][..n]) {
            *r = s * a;
        }
        row[n + i] = 1.0;
        row[width - 1] = s * sf.b[i];
        rows.push(row);
    }
    let mut t = Tableau { rows, basis: (n..n + m).collect(), n, iterations: 0, cap };

    // Phase one.
    let mut phase1_cost = vec![0.0; n + m];
    for c in phase1_cost.iter_mut().skip(n) {
        *c = 1.0;
    }
    t.run(&phase1_cost, n)?;
    let infeasibility: f64 = (0..t.rows.len()).filter(|&i| t.basis[i] >= n).map(|i| t.rhs(i)).sum();
    let scale = 1.0 + sf.b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeasibility > 1e-9 * scale {
        return Ok((Outcome::Infeasible, t.iterations));
    }

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linear combinations of the others and are dropped.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] < n {
            i += 1;
            continue;
        }
        let best = (0..n)
            .filter(|j| !t.basis.contains(j))
            .map(|j| (j, t.rows[i][j].abs()))
            .filter(|&(_, a)| a > PIVOT_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        match best {
            Some((j, _)) => {
                t.pivot(i, j);
                i += 1;
            }
            None => {
                t.rows.remove(i);
                t.basis.remove(i);
            }
        }
    }

    // Phase two.
    let mut cost = vec![0.0; n + m];
    cost[..n].copy_from_slice(&sf.c);
    if let PhaseEnd::Unbounded = t.run(&cost, n)? {
        return Ok((Outcome::Unbounded, t.iterations));
    }

    let mut z = vec![0.0; n];
    for (row, &bi) in t.rows.iter().zip(&t.basis) {
        if bi < n {
            z[bi] = row[width - 1].max(0.0);
        }
    }
    let y = (0..m)
        .map(|k| {
            let yk: f64 = t.rows.iter().zip(&t.basis).map(|(row, &bi)| cost[bi] * row[t.n + k]).sum();
            row_sign[k] * yk
        })
        .collect();
    Ok((Outcome::Optimal { z, y }, t.iterations))
}
