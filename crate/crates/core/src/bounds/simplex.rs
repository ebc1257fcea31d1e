//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Sized for the strategy LPs in this crate: a handful of rows and at most a
//! few thousand columns.

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize objective·x` subject to the constraints and `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Objective row in `z − c·x = value` form; last entry is the value.
    cost: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cost.len() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != row && r[col] != 0.0 {
                let f = r[col];
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations over columns `< allowed`; Bland's rule on both
    /// the entering and the leaving choice.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        let rhs = self.width();
        for _ in 0..100_000 {
            let Some(col) = (0..allowed).find(|&j| self.cost[j] < -EPS) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, r) in self.rows.iter().enumerate() {
                if r[col] > EPS {
                    let ratio = r[rhs] / r[col];
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - EPS || (ratio <= br + EPS && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = best else {
                return Err(Error::LinearProgram("unbounded".into()));
            };
            self.pivot(row, col);
        }
        Err(Error::LinearProgram("iteration limit".into()))
    }
}

pub fn maximize(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.objective.len();
    let m = lp.constraints.len();
    if lp.constraints.iter().any(|c| c.coeffs.len() != n) {
        return Err(Error::LinearProgram("constraint width mismatch".into()));
    }

    // Flip rows so every right-hand side is non-negative.
    let rows: Vec<(Vec<f64>, Relation, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|v| -v).collect(), rel, -c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs)
            }
        })
        .collect();

    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + n_slack + n_art;
    let art_start = n + n_slack;

    let mut t = Tableau { rows: Vec::with_capacity(m), cost: vec![0.0; width + 1], basis: vec![0; m] };
    let (mut s, mut a) = (n, art_start);
    for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        let mut row = vec![0.0; width + 1];
        row[..n].copy_from_slice(coeffs);
        row[width] = *rhs;
        match rel {
            Relation::Le => {
                row[s] = 1.0;
                t.basis[i] = s;
                s += 1;
            }
            Relation::Ge => {
                row[s] = -1.0;
                s += 1;
                row[a] = 1.0;
                t.basis[i] = a;
                a += 1;
            }
            Relation::Eq => {
                row[a] = 1.0;
                t.basis[i] = a;
                a += 1;
            }
        }
        t.rows.push(row);
    }

    // Phase 1: maximize −Σ artificials.
    if n_art > 0 {
        for i in 0..m {
            if t.basis[i] >= art_start {
                for j in 0..=width {
                    t.cost[j] -= t.rows[i][j];
                }
            }
        }
        for j in art_start..width {
            t.cost[j] = 0.0;
        }
        t.optimize(width)?;
        if t.cost[width] < -1e-9 {
            return Err(Error::LinearProgram("infeasible".into()));
        }
        // Drive zero-level artificials out of the basis, dropping redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= art_start {
                if let Some(col) = (0..art_start).find(|&j| t.rows[i][j].abs() > 1e-9) {
                    t.pivot(i, col);
                    i += 1;
                } else {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            } else {
                i += 1;
            }
        }
    }

    // Phase 2 on the structural and slack columns only.
    t.cost = vec![0.0; width + 1];
    for (j, c) in lp.objective.iter().enumerate() {
        t.cost[j] = -c;
    }
    for i in 0..t.rows.len() {
        let b = t.basis[i];
        let f = t.cost[b];
        if f != 0.0 {
            for j in 0..=width {
                t.cost[j] -= f * t.rows[i][j];
            }
        }
    }
    t.optimize(art_start)?;

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[i][width];
        }
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { value, x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn row(coeffs: &[f64], relation: Relation, rhs: f64) -> Constraint {
        Constraint { coeffs: coeffs.to_vec(), relation, rhs }
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36.
        let lp = LinearProgram {
            objective: vec![3.0, 5.0],
            constraints: vec![
                row(&[1.0, 0.0], Relation::Le, 4.0),
                row(&[0.0, 2.0], Relation::Le, 12.0),
                row(&[3.0, 2.0], Relation::Le, 18.0),
            ],
        };
        let sol = maximize(&lp).unwrap();
        assert_abs_diff_eq!(sol.value, 36.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.x[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.x[1], 6.0, epsilon = 1e-12);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max x + 2y, x + y = 1, x ≥ 0.25 → (0.25, 0.75).
        let lp = LinearProgram {
            objective: vec![1.0, 2.0],
            constraints: vec![row(&[1.0, 1.0], Relation::Eq, 1.0), row(&[1.0, 0.0], Relation::Ge, 0.25)],
        };
        let sol = maximize(&lp).unwrap();
        assert_abs_diff_eq!(sol.value, 1.75, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram {
            objective: vec![1.0],
            constraints: vec![row(&[1.0], Relation::Le, 1.0), row(&[1.0], Relation::Ge, 2.0)],
        };
        assert!(maximize(&lp).is_err());
        let lp = LinearProgram { objective: vec![1.0, 0.0], constraints: vec![row(&[0.0, 1.0], Relation::Le, 1.0)] };
        assert!(maximize(&lp).is_err());
    }

    #[test]
    fn redundant_equalities() {
        let lp = LinearProgram {
            objective: vec![1.0, 1.0],
            constraints: vec![row(&[1.0, 1.0], Relation::Eq, 2.0), row(&[2.0, 2.0], Relation::Eq, 4.0)],
        };
        assert_abs_diff_eq!(maximize(&lp).unwrap().value, 2.0, epsilon = 1e-12);
    }
}
