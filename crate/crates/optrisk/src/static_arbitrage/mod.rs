//! Static-arbitrage constraints on normalized call surfaces.
//!
//! Constraints are linear rows `A c >= b` over the lattice prices, in the
//! strike-ratio coordinate `k = e^m`: outright bounds, two-sided call-spread
//! slopes, butterfly convexity within each expiry, and calendar
//! monotonicity at matched delta labels. The same rows drive violation
//! detection, minimal l1 repair, and the projection onto factor space.

pub mod simplex;

pub use simplex::{solve_lp, LinearConstraint, LinearProgram, LpSolution, LpStatus, Relation};

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::market_data::LiquidLattice;

/// Constraint family tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintFamily {
    Bound,
    Monotonicity,
    Convexity,
    Calendar,
}

/// Linear static-arbitrage system `A c >= b` in price space.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    /// R x N coefficient matrix.
    pub a: DMatrix<f64>,
    /// Right-hand sides.
    pub b: DVector<f64>,
    pub families: Vec<ConstraintFamily>,
    pub lattice: LiquidLattice,
}

/// Default detection tolerance (an order below expected price noise).
pub const DETECT_TOL: f64 = 1e-8;

/// Build the full constraint family set for a lattice.
pub fn build_constraints(lattice: &LiquidLattice) -> Result<ConstraintSystem> {
    let n = lattice.len();
    let nodes = lattice.nodes();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut families: Vec<ConstraintFamily> = Vec::new();

    // Bounds: c >= max(1-k, 0) and c <= 1 at every node.
    for (j, node) in nodes.iter().enumerate() {
        let k = node.m.exp();
        rows.push(vec![(j, 1.0)]);
        rhs.push((1.0 - k).max(0.0));
        families.push(ConstraintFamily::Bound);
        rows.push(vec![(j, -1.0)]);
        rhs.push(-1.0);
        families.push(ConstraintFamily::Bound);
    }

    for group in lattice.expiry_groups() {
        let idx: Vec<usize> = group.range.clone().collect();
        for w in idx.windows(2) {
            let (j1, j2) = (w[0], w[1]);
            let k1 = nodes[j1].m.exp();
            let k2 = nodes[j2].m.exp();
            let dk = k2 - k1;
            if dk <= 1e-12 {
                return Err(Error::Constraint(format!(
                    "duplicate strike ratio {k1} within expiry tau={}",
                    group.tau
                )));
            }
            // Slope <= 0: c(k1) - c(k2) >= 0.
            rows.push(vec![(j1, 1.0), (j2, -1.0)]);
            rhs.push(0.0);
            families.push(ConstraintFamily::Monotonicity);
            // Slope >= -1: c(k2) - c(k1) >= -(k2 - k1).
            rows.push(vec![(j1, -1.0), (j2, 1.0)]);
            rhs.push(-dk);
            families.push(ConstraintFamily::Monotonicity);
        }
        for w in idx.windows(3) {
            let (j1, j2, j3) = (w[0], w[1], w[2]);
            let k1 = nodes[j1].m.exp();
            let k2 = nodes[j2].m.exp();
            let k3 = nodes[j3].m.exp();
            // Butterfly: (k3-k2) c1 - (k3-k1) c2 + (k2-k1) c3 >= 0.
            rows.push(vec![(j1, k3 - k2), (j2, -(k3 - k1)), (j3, k2 - k1)]);
            rhs.push(0.0);
            families.push(ConstraintFamily::Convexity);
        }
    }

    // Calendar: price non-decreasing in expiry at matched delta label.
    let groups = lattice.expiry_groups();
    for labels in lattice.delta_labels() {
        for w in groups.windows(2) {
            let find = |g: &super::market_data::ExpiryGroup| {
                g.range
                    .clone()
                    .find(|&j| nodes[j].delta_label == labels)
            };
            if let (Some(j1), Some(j2)) = (find(&w[0]), find(&w[1])) {
                rows.push(vec![(j2, 1.0), (j1, -1.0)]);
                rhs.push(0.0);
                families.push(ConstraintFamily::Calendar);
            }
        }
    }

    let r = rows.len();
    let mut a = DMatrix::zeros(r, n);
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            a[(i, j)] = v;
        }
    }
    Ok(ConstraintSystem {
        a,
        b: DVector::from_vec(rhs),
        families,
        lattice: lattice.clone(),
    })
}

/// Violation report from [`detect`].
#[derive(Debug, Clone)]
pub struct ViolationReport {
    /// Indices of violated rows with their shortfall `b_r - a_r.c`.
    pub violations: Vec<(usize, f64)>,
    pub fraction: f64,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// List rows with `a_r . c < b_r - tol`.
pub fn detect(system: &ConstraintSystem, prices: &[f64], tol: f64) -> ViolationReport {
    assert_eq!(prices.len(), system.a.ncols(), "price vector length");
    let c = DVector::from_column_slice(prices);
    let lhs = &system.a * &c;
    let mut violations = Vec::new();
    for i in 0..system.a.nrows() {
        let shortfall = system.b[i] - lhs[i];
        if shortfall > tol {
            violations.push((i, shortfall));
        }
    }
    let fraction = violations.len() as f64 / system.a.nrows() as f64;
    ViolationReport { violations, fraction }
}

/// Minimal l1 perturbation restoring all constraints:
/// `min ||eps||_1 s.t. A (c + eps) >= b`, solved as an LP with the
/// perturbation split into positive and negative parts.
pub fn repair_l1(system: &ConstraintSystem, prices: &[f64]) -> Result<Vec<f64>> {
    let n = system.a.ncols();
    assert_eq!(prices.len(), n, "price vector length");
    let report = detect(system, prices, DETECT_TOL);
    if report.is_clean() {
        return Ok(prices.to_vec());
    }
    let r = system.a.nrows();
    let mut lp = LinearProgram::new(2 * n);
    lp.objective = vec![1.0; 2 * n];
    lp.bounds = vec![(0.0, f64::INFINITY); 2 * n];
    let c = DVector::from_column_slice(prices);
    let slack = &system.a * &c - &system.b;
    for i in 0..r {
        let mut coeffs = vec![0.0; 2 * n];
        for j in 0..n {
            let a = system.a[(i, j)];
            if a != 0.0 {
                coeffs[j] = a;
                coeffs[n + j] = -a;
            }
        }
        lp.constraints.push(LinearConstraint {
            coeffs,
            relation: Relation::Ge,
            rhs: -slack[i],
        });
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let repaired: Vec<f64> = (0..n)
                .map(|j| prices[j] + sol.x[j] - sol.x[n + j])
                .collect();
            Ok(repaired)
        }
        LpStatus::Infeasible => Err(Error::Repair(
            "constraint system is infeasible; no repair exists".into(),
        )),
        LpStatus::Unbounded => Err(Error::Repair(
            "repair program unbounded; constraint system is malformed".into(),
        )),
    }
}

/// Static-arbitrage constraints projected to factor space:
/// `a_proj . xi >= b`, rows scaled to unit normals.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FactorConstraintSystem {
    /// R' x d matrix with unit-norm rows.
    pub a_proj: DMatrix<f64>,
    pub b: DVector<f64>,
    pub redundancy_removed: bool,
}

impl FactorConstraintSystem {
    /// Project a weighted price-space system through the price basis:
    /// rows `(A Lambda^{-1}) G^T xi >= b_hat - (A Lambda^{-1}) g0`.
    ///
    /// `inv_weights[j]` multiplies column j of `A` (the reciprocal of the
    /// vega weight), `basis` is d x N in weighted price space, `g0` the
    /// weighted mean surface.
    pub fn project(
        system: &ConstraintSystem,
        inv_weights: &[f64],
        basis: &DMatrix<f64>,
        g0: &DVector<f64>,
    ) -> Result<Self> {
        let n = system.a.ncols();
        if inv_weights.len() != n || basis.ncols() != n || g0.len() != n {
            return Err(Error::Constraint(format!(
                "projection dimension mismatch: A has {n} columns, {} weights, basis {}x{}, g0 {}",
                inv_weights.len(),
                basis.nrows(),
                basis.ncols(),
                g0.len()
            )));
        }
        let mut a_w = system.a.clone();
        for j in 0..n {
            let s = inv_weights[j];
            for i in 0..a_w.nrows() {
                a_w[(i, j)] *= s;
            }
        }
        let mut a_proj = &a_w * basis.transpose();
        let mut b = &system.b - &a_w * g0;
        // Unit normals keep facet distances and boundary conditions in one
        // scale; drop rows whose projection vanishes (they constrain only
        // directions outside the factor span).
        let mut keep_rows = Vec::new();
        for i in 0..a_proj.nrows() {
            let norm = a_proj.row(i).norm();
            if norm > 1e-12 {
                keep_rows.push(i);
            } else if b[i] > 1e-10 {
                return Err(Error::Constraint(format!(
                    "row {i} projects to zero but has positive rhs {}; factor region empty",
                    b[i]
                )));
            }
        }
        let mut a2 = DMatrix::zeros(keep_rows.len(), a_proj.ncols());
        let mut b2 = DVector::zeros(keep_rows.len());
        for (ri, &i) in keep_rows.iter().enumerate() {
            let norm = a_proj.row(i).norm();
            for j in 0..a_proj.ncols() {
                a2[(ri, j)] = a_proj[(i, j)] / norm;
            }
            b2[ri] = b[i] / norm;
        }
        a_proj = a2;
        b = b2;
        Ok(Self {
            a_proj,
            b,
            redundancy_removed: false,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.a_proj.nrows()
    }

    pub fn dim(&self) -> usize {
        self.a_proj.ncols()
    }

    /// True when `xi` satisfies every row within `tol`.
    pub fn contains(&self, xi: &[f64], tol: f64) -> bool {
        let v = DVector::from_column_slice(xi);
        let lhs = &self.a_proj * &v;
        (0..self.num_rows()).all(|i| lhs[i] >= self.b[i] - tol)
    }

    /// Signed distances to every facet (rows have unit normals).
    pub fn facet_distances(&self, xi: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(xi);
        let lhs = &self.a_proj * &v;
        (0..self.num_rows()).map(|i| lhs[i] - self.b[i]).collect()
    }

    /// Chebyshev center and inradius of the polytope, via one LP:
    /// maximize r subject to `a_i . x - r >= b_i`.
    pub fn chebyshev_center(&self) -> Result<(Vec<f64>, f64)> {
        let d = self.dim();
        let mut lp = LinearProgram::new(d + 1);
        lp.objective = vec![0.0; d + 1];
        lp.objective[d] = -1.0; // maximize r
        lp.bounds[d] = (0.0, f64::INFINITY);
        for i in 0..self.num_rows() {
            let mut coeffs = vec![0.0; d + 1];
            for j in 0..d {
                coeffs[j] = self.a_proj[(i, j)];
            }
            coeffs[d] = -1.0;
            lp.constraints.push(LinearConstraint {
                coeffs,
                relation: Relation::Ge,
                rhs: self.b[i],
            });
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => Ok((sol.x[..d].to_vec(), sol.x[d])),
            LpStatus::Unbounded => Err(Error::Constraint(
                "factor polytope is unbounded; inradius undefined".into(),
            )),
            LpStatus::Infeasible => Err(Error::Constraint("factor polytope is empty".into())),
        }
    }
}

/// Remove redundant rows: row r is dropped when minimizing `a_r . xi` over
/// the other rows (with row r itself relaxed by one unit) cannot fall below
/// `b_r`. Unbounded subproblems keep the row. The feasible region is
/// unchanged.
pub fn eliminate_redundant(system: &FactorConstraintSystem) -> Result<FactorConstraintSystem> {
    let r = system.num_rows();
    let d = system.dim();
    let mut keep = vec![true; r];
    for row in 0..r {
        let mut lp = LinearProgram::new(d);
        lp.objective = (0..d).map(|j| system.a_proj[(row, j)]).collect();
        for i in 0..r {
            if !keep[i] {
                continue; // already proven redundant
            }
            let rhs = if i == row {
                system.b[i] - 1.0
            } else {
                system.b[i]
            };
            lp.constraints.push(LinearConstraint {
                coeffs: (0..d).map(|j| system.a_proj[(i, j)]).collect(),
                relation: Relation::Ge,
                rhs,
            });
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => {
                if sol.objective >= system.b[row] - 1e-9 {
                    keep[row] = false;
                }
            }
            LpStatus::Unbounded => {} // reaches below b_r; keep
            LpStatus::Infeasible => {
                return Err(Error::Constraint(
                    "redundancy subproblem infeasible; region empty".into(),
                ))
            }
        }
    }
    let kept: Vec<usize> = (0..r).filter(|&i| keep[i]).collect();
    let mut a2 = DMatrix::zeros(kept.len(), d);
    let mut b2 = DVector::zeros(kept.len());
    for (ri, &i) in kept.iter().enumerate() {
        for j in 0..d {
            a2[(ri, j)] = system.a_proj[(i, j)];
        }
        b2[ri] = system.b[i];
    }
    Ok(FactorConstraintSystem {
        a_proj: a2,
        b: b2,
        redundancy_removed: true,
    })
}

/// Export a price-space system as delimited text (family, index:value
/// pairs, rhs) for debugging.
pub fn export_constraints(system: &ConstraintSystem) -> String {
    let mut out = String::from("family,coefficients,rhs\n");
    for i in 0..system.a.nrows() {
        let family = match system.families[i] {
            ConstraintFamily::Bound => "bound",
            ConstraintFamily::Monotonicity => "monotonicity",
            ConstraintFamily::Convexity => "convexity",
            ConstraintFamily::Calendar => "calendar",
        };
        let mut coeffs = String::new();
        for j in 0..system.a.ncols() {
            let v = system.a[(i, j)];
            if v != 0.0 {
                if !coeffs.is_empty() {
                    coeffs.push(' ');
                }
                write!(coeffs, "{j}:{v:.12e}").unwrap();
            }
        }
        writeln!(out, "{family},{coeffs},{:.12e}", system.b[i]).unwrap();
    }
    out
}
