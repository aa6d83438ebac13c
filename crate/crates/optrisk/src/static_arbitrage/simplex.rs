//! Dense two-phase simplex solver.
//!
//! This is the substrate for the arbitrage repair and redundancy
//! elimination LPs: dense tableau, Dantzig pricing with Bland's rule as the
//! anti-cycling fallback, explicit Phase 1 with artificial variables.
//! Problem sizes here are a few hundred rows by a couple of thousand
//! columns, where a dense tableau is both simple and fast.

use crate::error::{Error, Result};

/// Constraint sense for a single row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

/// One linear row `coeffs . x (rel) rhs`.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program in minimization form.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Objective coefficients, one per variable (minimized).
    pub objective: Vec<f64>,
    /// Inequality and equality rows.
    pub constraints: Vec<LinearConstraint>,
    /// Per-variable `(lower, upper)` bounds; use infinities for free vars.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// Program over `n` free variables with no rows.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            constraints: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::Lp(format!(
                "bounds length {} does not match {} variables",
                self.bounds.len(),
                n
            )));
        }
        if !self.objective.iter().all(|v| v.is_finite()) {
            return Err(Error::Lp("objective has non-finite coefficients".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::Lp(format!(
                    "row {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if !c.coeffs.iter().all(|v| v.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::Lp(format!("row {i} has non-finite data")));
            }
        }
        Ok(())
    }
}

/// Termination status of `solve_lp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output; `x` and `objective` are meaningful only when optimal.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;
const MAX_ITER: usize = 1_000_000;
const BLAND_TRIGGER: usize = 40;

/// Solve a linear program with the dense two-phase simplex method.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let mut tab = Tableau::build(lp)?;
    if !tab.phase_one()? {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            objective: f64::NAN,
        });
    }
    match tab.phase_two()? {
        PhaseTwo::Optimal => {
            let x = tab.extract(lp);
            let objective = lp
                .objective
                .iter()
                .zip(&x)
                .map(|(c, v)| c * v)
                .sum::<f64>();
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                objective,
            })
        }
        PhaseTwo::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective: f64::NEG_INFINITY,
        }),
    }
}

enum PhaseTwo {
    Optimal,
    Unbounded,
}

// How an original variable maps onto the nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    // x = lower + column
    Shifted { col: usize, lower: f64 },
    // x = upper - column
    Mirrored { col: usize, upper: f64 },
    // x = pos - neg
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: Vec<Vec<f64>>, // each length n_total + 1 (rhs last)
    basis: Vec<usize>,
    active: Vec<bool>,
    n_std: usize,
    n_total: usize,
    var_map: Vec<VarMap>,
    phase2_cost: Vec<f64>,
    iterations: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self> {
        let n = lp.num_vars();
        let mut var_map = Vec::with_capacity(n);
        let mut n_std = 0usize;
        let mut extra_rows: Vec<LinearConstraint> = Vec::new();
        for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
            if lo.is_finite() {
                let col = n_std;
                n_std += 1;
                var_map.push(VarMap::Shifted { col, lower: lo });
                if hi.is_finite() {
                    if hi < lo {
                        return Err(Error::Lp(format!("variable {j} has empty bounds")));
                    }
                    let mut coeffs = vec![0.0; n];
                    coeffs[j] = 1.0;
                    extra_rows.push(LinearConstraint {
                        coeffs,
                        relation: Relation::Le,
                        rhs: hi,
                    });
                }
            } else if hi.is_finite() {
                let col = n_std;
                n_std += 1;
                var_map.push(VarMap::Mirrored { col, upper: hi });
            } else {
                let pos = n_std;
                let neg = n_std + 1;
                n_std += 2;
                var_map.push(VarMap::Split { pos, neg });
            }
        }

        let all_rows: Vec<&LinearConstraint> =
            lp.constraints.iter().chain(extra_rows.iter()).collect();
        let n_rows = all_rows.len();
        // One slack per inequality row.
        let n_slack = all_rows
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_rows);
        let mut basis = vec![usize::MAX; n_rows];
        let mut slack_idx = 0usize;
        let n_cols_guess = n_std + n_slack;

        for c in &all_rows {
            let mut row = vec![0.0; n_cols_guess + 1];
            let mut rhs = c.rhs;
            for (j, &a) in c.coeffs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                match var_map[j] {
                    VarMap::Shifted { col, lower } => {
                        row[col] += a;
                        rhs -= a * lower;
                    }
                    VarMap::Mirrored { col, upper } => {
                        row[col] -= a;
                        rhs -= a * upper;
                    }
                    VarMap::Split { pos, neg } => {
                        row[pos] += a;
                        row[neg] -= a;
                    }
                }
            }
            let slack_col = match c.relation {
                Relation::Ge => {
                    let col = n_std + slack_idx;
                    slack_idx += 1;
                    row[col] = -1.0;
                    Some(col)
                }
                Relation::Le => {
                    let col = n_std + slack_idx;
                    slack_idx += 1;
                    row[col] = 1.0;
                    Some(col)
                }
                Relation::Eq => None,
            };
            if rhs < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
                rhs = -rhs;
            }
            *row.last_mut().unwrap() = rhs;
            let ri = rows.len();
            // A slack with +1 coefficient and nonnegative rhs can start basic.
            if let Some(col) = slack_col {
                if row[col] > 0.5 {
                    basis[ri] = col;
                }
            }
            rows.push(row);
        }

        // Artificial columns for the remaining rows.
        let n_art = basis.iter().filter(|b| **b == usize::MAX).count();
        let n_total = n_cols_guess + n_art;
        let mut art = 0usize;
        for (ri, row) in rows.iter_mut().enumerate() {
            let rhs = row.pop().unwrap();
            row.resize(n_total, 0.0);
            if basis[ri] == usize::MAX {
                let col = n_cols_guess + art;
                art += 1;
                row[col] = 1.0;
                basis[ri] = col;
            }
            row.push(rhs);
        }

        // Phase-2 cost over standard columns.
        let mut phase2_cost = vec![0.0; n_total];
        for (j, &c) in lp.objective.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            match var_map[j] {
                VarMap::Shifted { col, .. } => phase2_cost[col] += c,
                VarMap::Mirrored { col, .. } => phase2_cost[col] -= c,
                VarMap::Split { pos, neg } => {
                    phase2_cost[pos] += c;
                    phase2_cost[neg] -= c;
                }
            }
        }

        let active = vec![true; rows.len()];
        Ok(Self {
            rows,
            basis,
            active,
            n_std: n_cols_guess,
            n_total,
            var_map,
            phase2_cost,
            iterations: 0,
        })
    }

    /// Returns false when the program is infeasible.
    fn phase_one(&mut self) -> Result<bool> {
        if self.n_total == self.n_std {
            return Ok(true); // no artificials needed
        }
        let mut cost = vec![0.0; self.n_total];
        for c in cost.iter_mut().take(self.n_total).skip(self.n_std) {
            *c = 1.0;
        }
        let mut reduced = self.reduced_costs(&cost);
        let mut value: f64 = (0..self.rows.len())
            .filter(|&i| self.basis[i] >= self.n_std)
            .map(|i| *self.rows[i].last().unwrap())
            .sum();
        self.pivot_loop(&mut reduced, &mut value, self.n_total)?;
        if value > FEAS_TOL {
            return Ok(false);
        }
        // Drive lingering artificials out of the basis.
        for i in 0..self.rows.len() {
            if self.basis[i] < self.n_std {
                continue;
            }
            let pivot_col = (0..self.n_std).find(|&j| self.rows[i][j].abs() > PIVOT_TOL);
            match pivot_col {
                Some(j) => self.pivot(i, j),
                None => self.active[i] = false, // redundant zero row
            }
        }
        Ok(true)
    }

    fn phase_two(&mut self) -> Result<PhaseTwo> {
        let cost = self.phase2_cost.clone();
        let mut reduced = self.reduced_costs(&cost);
        let mut value: f64 = (0..self.rows.len())
            .filter(|&i| self.active[i])
            .map(|i| cost[self.basis[i]] * self.rows[i].last().unwrap())
            .sum();
        if self.pivot_loop(&mut reduced, &mut value, self.n_std)? {
            Ok(PhaseTwo::Optimal)
        } else {
            Ok(PhaseTwo::Unbounded)
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut reduced = cost.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            if !self.active[i] {
                continue;
            }
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (r, a) in reduced.iter_mut().zip(row.iter()) {
                    *r -= cb * a;
                }
            }
        }
        reduced
    }

    /// Run simplex pivots until optimal (true) or unbounded (false).
    /// Dantzig pricing, switching to Bland's rule after a degeneracy streak.
    fn pivot_loop(
        &mut self,
        reduced: &mut Vec<f64>,
        value: &mut f64,
        n_cols: usize,
    ) -> Result<bool> {
        let mut degenerate_streak = 0usize;
        let mut bland = false;
        loop {
            self.iterations += 1;
            if self.iterations > MAX_ITER {
                return Err(Error::Numeric(format!(
                    "simplex iteration cap {MAX_ITER} reached"
                )));
            }
            let entering = if bland {
                (0..n_cols).find(|&j| reduced[j] < -OPT_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for (j, &r) in reduced.iter().enumerate().take(n_cols) {
                    if r < -OPT_TOL && best.map_or(true, |(_, br)| r < br) {
                        best = Some((j, r));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(j) = entering else {
                return Ok(true);
            };
            // Ratio test; ties resolved by the smallest basis variable index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                if !self.active[i] {
                    continue;
                }
                let a = self.rows[i][j];
                if a > PIVOT_TOL {
                    let ratio = self.rows[i].last().unwrap() / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-12
                                || (ratio < lr + 1e-12 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((i, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                degenerate_streak += 1;
                if degenerate_streak > BLAND_TRIGGER {
                    bland = true;
                }
            } else {
                degenerate_streak = 0;
                bland = false;
            }
            *value += ratio * reduced[j];
            let rj = reduced[j];
            self.pivot(i, j);
            // Update the reduced-cost row from the (normalized) pivot row.
            let prow = &self.rows[i];
            for (r, a) in reduced.iter_mut().zip(prow.iter()) {
                *r -= rj * a;
            }
            reduced[j] = 0.0;
        }
    }

    fn pivot(&mut self, pi: usize, pj: usize) {
        let piv = self.rows[pi][pj];
        let inv = 1.0 / piv;
        for v in self.rows[pi].iter_mut() {
            *v *= inv;
        }
        self.rows[pi][pj] = 1.0;
        let prow = self.rows[pi].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == pi || !self.active[i] {
                continue;
            }
            let f = row[pj];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[pj] = 0.0;
            }
        }
        self.basis[pi] = pj;
    }

    fn extract(&self, lp: &LinearProgram) -> Vec<f64> {
        let mut std_vals = vec![0.0; self.n_total];
        for (i, row) in self.rows.iter().enumerate() {
            if self.active[i] {
                std_vals[self.basis[i]] = *row.last().unwrap();
            }
        }
        let mut x = vec![0.0; lp.num_vars()];
        for (j, vm) in self.var_map.iter().enumerate() {
            x[j] = match *vm {
                VarMap::Shifted { col, lower } => lower + std_vals[col],
                VarMap::Mirrored { col, upper } => upper - std_vals[col],
                VarMap::Split { pos, neg } => std_vals[pos] - std_vals[neg],
            };
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ge(coeffs: Vec<f64>, rhs: f64) -> LinearConstraint {
        LinearConstraint {
            coeffs,
            relation: Relation::Ge,
            rhs,
        }
    }

    #[test]
    fn single_bound() {
        // min x s.t. x >= 1
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.constraints.push(ge(vec![1.0], 1.0));
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn tight_face() {
        // min x + y s.t. x + y >= 2, x >= 0, y >= 0
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.bounds = vec![(0.0, f64::INFINITY); 2];
        lp.constraints.push(ge(vec![1.0, 1.0], 2.0));
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.objective, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        // x >= 2 and x <= 1
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.constraints.push(ge(vec![1.0], 2.0));
        lp.constraints.push(LinearConstraint {
            coeffs: vec![1.0],
            relation: Relation::Le,
            rhs: 1.0,
        });
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x s.t. x >= 0
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![-1.0];
        lp.bounds = vec![(0.0, f64::INFINITY)];
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // min 2x + 3y s.t. x + y = 4, x - y >= -2, free vars.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![2.0, 3.0];
        lp.constraints.push(LinearConstraint {
            coeffs: vec![1.0, 1.0],
            relation: Relation::Eq,
            rhs: 4.0,
        });
        lp.constraints.push(ge(vec![1.0, -1.0], -2.0));
        // Along x + y = 4 the objective is 12 - x, so x rises to its cap.
        lp.constraints.push(LinearConstraint {
            coeffs: vec![1.0, 0.0],
            relation: Relation::Le,
            rhs: 3.0,
        });
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.x[0], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[1], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.objective, 9.0, epsilon = 1e-9);
    }

    #[test]
    fn honors_variable_bounds() {
        // min -x - 2y over the box [0,1] x [-1, 2] with x + y <= 2.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -2.0];
        lp.bounds = vec![(0.0, 1.0), (-1.0, 2.0)];
        lp.constraints.push(LinearConstraint {
            coeffs: vec![1.0, 1.0],
            relation: Relation::Le,
            rhs: 2.0,
        });
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.x[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[1], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.objective, -4.0, epsilon = 1e-9);
    }
}
