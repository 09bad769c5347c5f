//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Solves `min c·x` subject to `A_eq x = b_eq`, `A_ub x <= b_ub`, `x >= 0`.
//! The instances in this crate are small (a few hundred columns at most), so
//! a dense tableau is both simple and exact enough. Once the optimal basis is
//! known the basic values are recomputed from the original columns by LU
//! with partial pivoting, which removes most of the error accumulated over
//! the pivots.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-11;
const FEASIBILITY_TOL: f64 = 1e-9;

/// A linear program in inequality/equality form over nonnegative variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ineq_matrix: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub status: LpStatus,
    /// Total pivots over both phases.
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            ..Self::default()
        }
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn le(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ineq_matrix.push(row);
        self.ineq_rhs.push(rhs);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("linear program has no variables".into()));
        }
        if self.eq_matrix.len() != self.eq_rhs.len() || self.ineq_matrix.len() != self.ineq_rhs.len() {
            return Err(Error::DimensionMismatch("constraint rows and right-hand sides differ in count".into()));
        }
        for row in self.eq_matrix.iter().chain(&self.ineq_matrix) {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "constraint row has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        let all_finite = self
            .objective
            .iter()
            .chain(self.eq_rhs.iter())
            .chain(self.ineq_rhs.iter())
            .chain(self.eq_matrix.iter().flatten())
            .chain(self.ineq_matrix.iter().flatten())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::NumericalFailure("non-finite coefficient in linear program".into()));
        }
        Ok(())
    }
}

/// Column kinds, in tableau order: structural, slack, artificial.
struct Layout {
    n_struct: usize,
    n_slack: usize,
    n_art: usize,
}

impl Layout {
    fn total(&self) -> usize {
        self.n_struct + self.n_slack + self.n_art
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n_struct + self.n_slack
    }
}

struct Tableau {
    /// `rows[r]` holds the constraint coefficients followed by the rhs.
    rows: Vec<Vec<f64>>,
    /// Original (sign-normalised) columns, used for the final refinement.
    original: Vec<Vec<f64>>,
    original_rhs: Vec<f64>,
    basis: Vec<usize>,
    layout: Layout,
    iterations: usize,
    max_iterations: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n_struct = lp.objective.len();
        let n_slack = lp.ineq_matrix.len();
        let m = lp.eq_matrix.len() + n_slack;

        // Rows are sign-normalised so every rhs is nonnegative. An inequality
        // row with nonnegative rhs can start with its slack in the basis;
        // every other row needs an artificial.
        let mut dense: Vec<(Vec<f64>, Option<usize>, f64)> = Vec::with_capacity(m);
        for (row, &b) in lp.eq_matrix.iter().zip(&lp.eq_rhs) {
            let mut coeffs = vec![0.0; n_struct + n_slack];
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            for (dst, &a) in coeffs.iter_mut().zip(row) {
                *dst = sign * a;
            }
            dense.push((coeffs, None, sign * b));
        }
        for (k, (row, &b)) in lp.ineq_matrix.iter().zip(&lp.ineq_rhs).enumerate() {
            let mut coeffs = vec![0.0; n_struct + n_slack];
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            for (dst, &a) in coeffs.iter_mut().zip(row) {
                *dst = sign * a;
            }
            coeffs[n_struct + k] = sign;
            let slack_basic = if sign > 0.0 { Some(n_struct + k) } else { None };
            dense.push((coeffs, slack_basic, sign * b));
        }

        let n_art = dense.iter().filter(|(_, s, _)| s.is_none()).count();
        let layout = Layout {
            n_struct,
            n_slack,
            n_art,
        };
        let width = layout.total();
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut original = Vec::with_capacity(m);
        let mut original_rhs = Vec::with_capacity(m);
        let mut next_art = n_struct + n_slack;
        for (coeffs, slack_basic, b) in dense {
            let mut row = vec![0.0; width + 1];
            row[..coeffs.len()].copy_from_slice(&coeffs);
            row[width] = b;
            match slack_basic {
                Some(j) => basis.push(j),
                None => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            original.push(coeffs);
            original_rhs.push(b);
            rows.push(row);
        }
        let max_iterations = 50_000 + 200 * (m + width);
        Self {
            rows,
            original,
            original_rhs,
            basis,
            layout,
            iterations: 0,
            max_iterations,
        }
    }

    fn width(&self) -> usize {
        self.layout.total()
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width();
        let p = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][j] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[j];
            if factor != 0.0 {
                for k in 0..=w {
                    row[k] -= factor * pivot_row[k];
                }
                row[j] = 0.0;
            }
        }
        self.basis[r] = j;
    }

    /// Reduced costs `d_j = c_j - c_B B^{-1} A_j` for the current basis.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let w = self.width();
        let mut d = cost.to_vec();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for k in 0..w {
                    d[k] -= cb * row[k];
                }
            }
        }
        d
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        let w = self.width();
        self.rows.iter().zip(&self.basis).map(|(row, &b)| cost[b] * row[w]).sum()
    }

    /// Runs the simplex loop with Bland's rule. Columns for which `allowed`
    /// is false never enter the basis.
    fn optimise(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<()> {
        let w = self.width();
        let mut d = self.reduced_costs(cost);
        loop {
            // Bland: lowest-index improving column enters.
            let entering = (0..w).find(|&j| allowed(j) && d[j] < -REDUCED_COST_TOL);
            let Some(j) = entering else {
                return Ok(());
            };
            // Ratio test; ties go to the lowest-index basic variable.
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let a = row[j];
                if a > PIVOT_TOL {
                    let ratio = row[w].max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((best, best_ratio)) => {
                            if ratio < best_ratio || (ratio == best_ratio && self.basis[r] < self.basis[best]) {
                                Some((r, ratio))
                            } else {
                                Some((best, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Unbounded);
            };
            self.pivot(r, j);
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(Error::NumericalFailure(format!(
                    "simplex exceeded {} pivots",
                    self.max_iterations
                )));
            }
            // Update reduced costs from the new pivot row.
            let factor = d[j];
            for k in 0..w {
                d[k] -= factor * self.rows[r][k];
            }
            d[j] = 0.0;
        }
    }

    /// Pivots zero-level artificials out of the basis, dropping rows that are
    /// linear combinations of the others.
    fn purge_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.layout.is_artificial(self.basis[r]) {
                let real = self.layout.n_struct + self.layout.n_slack;
                let candidate = (0..real).find(|&j| self.rows[r][j].abs() > PIVOT_TOL);
                match candidate {
                    Some(j) => {
                        self.pivot(r, j);
                        self.iterations += 1;
                    }
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                        self.original.remove(r);
                        self.original_rhs.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    /// Recomputes basic values by solving `B x_B = b` on the original columns.
    fn refined_basic_values(&self) -> Option<Vec<f64>> {
        let m = self.rows.len();
        let mut a = vec![vec![0.0; m + 1]; m];
        for (i, row) in a.iter_mut().enumerate() {
            for (k, &b) in self.basis.iter().enumerate() {
                row[k] = self.original[i][b];
            }
            row[m] = self.original_rhs[i];
        }
        solve_dense(a)
    }
}

/// Gaussian elimination with partial pivoting on an augmented `m x (m+1)` matrix.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let (piv, max) = (col..m)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if max < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        for r in (col + 1)..m {
            let factor = a[r][col] / a[col][col];
            if factor != 0.0 {
                for k in col..=m {
                    a[r][k] -= factor * a[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = ((r + 1)..m).map(|k| a[r][k] * x[k]).sum();
        x[r] = (a[r][m] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Solves the linear program to optimality.
pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let mut tab = Tableau::build(lp);
    let w = tab.width();
    let n_struct = tab.layout.n_struct;
    let real = n_struct + tab.layout.n_slack;

    if tab.layout.n_art > 0 {
        let phase1: Vec<f64> = (0..w).map(|j| if j >= real { 1.0 } else { 0.0 }).collect();
        tab.optimise(&phase1, &|_| true)?;
        let scale = 1.0 + tab.original_rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if tab.objective_value(&phase1) > FEASIBILITY_TOL * scale {
            return Err(Error::Infeasible);
        }
        tab.purge_artificials();
    }

    let mut phase2 = vec![0.0; w];
    phase2[..n_struct].copy_from_slice(&lp.objective);
    tab.optimise(&phase2, &|j| j < real)?;

    let tableau_values: Vec<f64> = tab.rows.iter().map(|row| row[w]).collect();
    let basic_values = tab
        .refined_basic_values()
        .filter(|v| v.iter().all(|&x| x >= -FEASIBILITY_TOL))
        .unwrap_or(tableau_values);

    let mut x = vec![0.0; n_struct];
    for (&b, &v) in tab.basis.iter().zip(&basic_values) {
        if b < n_struct {
            x[b] = v.max(0.0);
        }
    }
    let value = x.iter().zip(&lp.objective).map(|(a, c)| a * c).sum();
    Ok(LpSolution {
        x,
        value,
        status: LpStatus::Optimal,
        iterations: tab.iterations,
    })
}
