//! Dense two-phase primal simplex for `max c·x` subject to `A x = b, x ≥ 0`.
//!
//! Entering and leaving variables follow Bland's rule (lowest index), so the
//! method terminates on degenerate problems. Rows left with a zero-level
//! artificial variable after phase 1 that cannot be pivoted out are
//! linearly dependent and are dropped.

use thiserror::Error;

pub const PIVOT_TOL: f64 = 1e-10;
/// Phase-1 residual above which the program is declared infeasible.
const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint row {row} has {found} coefficients, expected {expected}")]
    Shape { row: usize, found: usize, expected: usize },
    #[error("linear program is infeasible (phase-1 residual {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex did not terminate within {0} pivots")]
    PivotLimit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub pivots: usize,
    /// Equality rows discarded as linearly dependent.
    pub redundant_rows: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn add_equality(&mut self, row: Vec<f64>, rhs: f64) -> Result<(), LpError> {
        if row.len() != self.vars() {
            return Err(LpError::Shape { row: self.rows.len(), found: row.len(), expected: self.vars() });
        }
        self.rows.push(row);
        self.rhs.push(rhs);
        Ok(())
    }

    /// Largest violation of the equality rows and of `x ≥ 0`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let eq = self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| (row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - b).abs())
            .fold(0.0, f64::max);
        x.iter().map(|v| (-v).max(0.0)).fold(eq, f64::max)
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let n = self.vars();
        let mut t = Tableau::new(self, n);
        let limit = 50 * (n + self.rows.len() + 1).pow(2);

        // phase 1: maximize −Σ artificials
        let mut phase1 = vec![0.0; t.cols];
        phase1[n..].fill(-1.0);
        t.set_objective(&phase1);
        t.run(t.cols, limit)?;
        let residual = -t.objective_value();
        if residual > FEASIBILITY_TOL {
            return Err(LpError::Infeasible(residual));
        }
        let redundant_rows = t.expel_artificials(n);

        // phase 2: artificials may not re-enter
        let mut phase2 = vec![0.0; t.cols];
        phase2[..n].copy_from_slice(&self.objective);
        t.set_objective(&phase2);
        t.run(n, limit)?;

        let mut x = vec![0.0; n];
        for (i, &b) in t.basis.iter().enumerate() {
            if b < n {
                x[b] = t.rhs(i).max(0.0);
            }
        }
        let value = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { value, x, pivots: t.pivots, redundant_rows })
    }
}

struct Tableau {
    /// Each row holds `cols` coefficients followed by the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    /// Reduced costs followed by minus the objective value.
    reduced: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram, n: usize) -> Self {
        let m = lp.rows.len();
        let cols = n + m;
        let mut rows = Vec::with_capacity(m);
        for (i, (row, &b)) in lp.rows.iter().zip(&lp.rhs).enumerate() {
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            let mut r: Vec<f64> = row.iter().map(|a| sign * a).collect();
            r.resize(cols + 1, 0.0);
            r[n + i] = 1.0;
            r[cols] = sign * b;
            rows.push(r);
        }
        Self { rows, basis: (n..cols).collect(), cols, reduced: vec![0.0; cols + 1], pivots: 0 }
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.cols]
    }

    fn objective_value(&self) -> f64 {
        -self.reduced[self.cols]
    }

    fn set_objective(&mut self, c: &[f64]) {
        self.reduced = c.to_vec();
        self.reduced.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c[b];
            if cb != 0.0 {
                for (r, a) in self.reduced.iter_mut().zip(&self.rows[i]) {
                    *r -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = 1.0 / self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                r[col] = 0.0;
            }
        }
        let f = self.reduced[col];
        if f != 0.0 {
            for (v, p) in self.reduced.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.reduced[col] = 0.0;
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Iterates to optimality, letting only columns below `enter_limit` enter.
    fn run(&mut self, enter_limit: usize, limit: usize) -> Result<(), LpError> {
        loop {
            if self.pivots > limit {
                return Err(LpError::PivotLimit(limit));
            }
            let Some(col) = (0..enter_limit).find(|&j| self.reduced[j] > PIVOT_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, r) in self.rows.iter().enumerate() {
                let a = r[col];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = r[self.cols] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-15 || (ratio <= lr + 1e-15 && self.basis[i] < self.basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(row, col);
        }
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are dependent and removed. Returns the number removed.
    fn expel_artificials(&mut self, n: usize) -> usize {
        let mut removed = 0;
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= n {
                if let Some(col) = (0..n).find(|&j| self.rows[i][j].abs() > PIVOT_TOL) {
                    self.pivot(i, col);
                } else {
                    self.rows.remove(i);
                    self.basis.remove(i);
                    removed += 1;
                    continue;
                }
            }
            i += 1;
        }
        removed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_textbook_problem() {
        // max 3x + 2y, x + y + s1 = 4, x + 3y + s2 = 6
        let mut lp = LinearProgram::new(vec![3.0, 2.0, 0.0, 0.0]);
        lp.add_equality(vec![1.0, 1.0, 1.0, 0.0], 4.0).unwrap();
        lp.add_equality(vec![1.0, 3.0, 0.0, 1.0], 6.0).unwrap();
        let sol = lp.solve().unwrap();
        assert!((sol.value - 12.0).abs() < 1e-12);
        assert!((sol.x[0] - 4.0).abs() < 1e-12);
        assert!(lp.residual(&sol.x) < 1e-12);
    }

    #[test]
    fn duplicate_rows_are_dropped() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.add_equality(vec![1.0, 1.0], 1.0).unwrap();
        lp.add_equality(vec![2.0, 2.0], 2.0).unwrap();
        let sol = lp.solve().unwrap();
        assert_eq!(sol.redundant_rows, 1);
        assert!((sol.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_is_handled() {
        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.add_equality(vec![-1.0, -1.0], -3.0).unwrap();
        let sol = lp.solve().unwrap();
        assert!(sol.value.abs() < 1e-12);
        assert!((sol.x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.add_equality(vec![1.0, 1.0], 1.0).unwrap();
        lp.add_equality(vec![1.0, 1.0], 2.0).unwrap();
        assert!(matches!(lp.solve(), Err(LpError::Infeasible(_))));

        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.add_equality(vec![1.0, -1.0], 1.0).unwrap();
        assert_eq!(lp.solve(), Err(LpError::Unbounded));
    }

    #[test]
    fn shape_is_checked() {
        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        assert!(lp.add_equality(vec![1.0], 1.0).is_err());
    }

    /// Brute force over vertices of the simplex {x ≥ 0, Σx = 1}.
    fn simplex_oracle(c: &[f64]) -> f64 {
        c.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    proptest! {
        #[test]
        fn probability_simplex_maximum(c in proptest::collection::vec(-5.0f64..5.0, 1..12)) {
            let n = c.len();
            let mut lp = LinearProgram::new(c.clone());
            lp.add_equality(vec![1.0; n], 1.0).unwrap();
            let sol = lp.solve().unwrap();
            prop_assert!((sol.value - simplex_oracle(&c)).abs() < 1e-12);
            prop_assert!(lp.residual(&sol.x) < 1e-12);
        }
    }
}
