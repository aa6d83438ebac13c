//! Linear factor decoding of vega-weighted price panels.
//!
//! The weighted surface is represented as `C Lambda = 1 (x) g0 + Xi G +
//! Xi_sec G_sec + Upsilon`. The first primary factor is the leading
//! principal direction of the demeaned weighted panel; the second is the
//! direction in the span of the next principal components that minimizes
//! the share of decoded dates falling outside the projected no-arbitrage
//! polytope (ties resolved toward explained variance); an optional third
//! minimizes the dynamic-arbitrage residual. Secondary factors are plain
//! principal components of the residuals.

mod io;
mod metrics;

pub use io::{read_factor_model, write_factor_model};
pub use metrics::{metrics, PdaInputs, ReconstructionMetrics};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::market_data::{LiquidLattice, SurfacePanel};
use crate::math::black_scholes as bs;
use crate::static_arbitrage::{eliminate_redundant, ConstraintSystem, FactorConstraintSystem};

/// Normalized-price vega of Eq.-style form `sqrt(tau) phi(-m/(s sqrt(tau)) +
/// s sqrt(tau)/2)`; strictly positive on valid inputs.
pub fn vega(tau: f64, m: f64, sigma_imp: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::domain("tau", format!("must be positive, got {tau}")));
    }
    if !(sigma_imp > 0.0) {
        return Err(Error::domain(
            "sigma_imp",
            format!("must be positive, got {sigma_imp}"),
        ));
    }
    Ok(bs::vega(sigma_imp, tau, m))
}

/// Diagonal vega weighting: `lambda_j` is the reciprocal of the
/// time-averaged Black–Scholes vega at node j.
#[derive(Debug, Clone, PartialEq)]
pub struct VegaWeights {
    /// Weight per node (`1 / mean vega`).
    pub lambdas: Vec<f64>,
    /// Time-averaged vega per node (the inverse weights).
    pub mean_vegas: Vec<f64>,
}

impl VegaWeights {
    /// Compute weights from a panel by inverting every price for its
    /// implied volatility and averaging the vegas over time.
    pub fn from_panel(panel: &SurfacePanel) -> Result<Self> {
        let n = panel.lattice.len();
        let l = panel.num_rows();
        let mut sums = vec![0.0; n];
        for i in 0..l {
            for (j, node) in panel.lattice.nodes().iter().enumerate() {
                let price = panel.prices[(i, j)];
                let iv = bs::implied_vol(price, node.tau, node.m, 1e-10)?;
                sums[j] += bs::vega(iv, node.tau, node.m);
            }
        }
        let mean_vegas: Vec<f64> = sums.iter().map(|s| s / l as f64).collect();
        if mean_vegas.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Estimation("mean vega must be positive and finite".into()));
        }
        Ok(Self {
            lambdas: mean_vegas.iter().map(|v| 1.0 / v).collect(),
            mean_vegas,
        })
    }

    /// Unit weights (tests and synthetic setups).
    pub fn identity(n: usize) -> Self {
        Self {
            lambdas: vec![1.0; n],
            mean_vegas: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Weighted prices `lambda_j c_j`.
    pub fn weight_row(&self, prices: &[f64]) -> Vec<f64> {
        prices
            .iter()
            .zip(&self.lambdas)
            .map(|(c, l)| c * l)
            .collect()
    }

    /// Invert the weighting.
    pub fn unweight_row(&self, weighted: &[f64]) -> Vec<f64> {
        weighted
            .iter()
            .zip(&self.mean_vegas)
            .map(|(w, v)| w * v)
            .collect()
    }
}

/// Decoded factor model for a panel.
#[derive(Debug, Clone)]
pub struct FactorModel {
    /// Weighted mean surface (length N).
    pub g0: DVector<f64>,
    /// Primary price basis, d x N with orthonormal rows.
    pub basis: DMatrix<f64>,
    /// Secondary price basis, d_s x N with orthonormal rows.
    pub secondary_basis: DMatrix<f64>,
    /// Primary factor series, L x d.
    pub primary_series: DMatrix<f64>,
    /// Secondary factor series, L x d_s.
    pub secondary_series: DMatrix<f64>,
    /// Reconstruction residuals, L x N (weighted space).
    pub residuals: DMatrix<f64>,
    /// Dates whose decoded primary factors violate the polytope.
    pub arbitrage_flagged: Vec<bool>,
    pub weights: VegaWeights,
    /// Projected static-arbitrage constraints (redundancy eliminated).
    pub factor_constraints: FactorConstraintSystem,
    pub lattice: LiquidLattice,
}

impl FactorModel {
    pub fn d_primary(&self) -> usize {
        self.basis.nrows()
    }

    pub fn d_secondary(&self) -> usize {
        self.secondary_basis.nrows()
    }

    /// Weighted reconstruction `g0 + G^T xi (+ G_sec^T xi_sec)`.
    pub fn reconstruct_weighted(&self, xi: &[f64], xi_sec: Option<&[f64]>) -> Vec<f64> {
        let mut w = self.g0.clone();
        w += self.basis.transpose() * DVector::from_column_slice(xi);
        if let Some(xs) = xi_sec {
            if !xs.is_empty() {
                w += self.secondary_basis.transpose() * DVector::from_column_slice(xs);
            }
        }
        w.as_slice().to_vec()
    }

    /// Normalized-price reconstruction (undoes the vega weighting).
    pub fn reconstruct_prices(&self, xi: &[f64], xi_sec: Option<&[f64]>) -> Vec<f64> {
        self.weights.unweight_row(&self.reconstruct_weighted(xi, xi_sec))
    }

    /// Least-squares factors of a weighted price vector.
    pub fn solve_factors(&self, weighted: &[f64]) -> Result<DVector<f64>> {
        solve_factors(&self.g0, &self.basis, weighted)
    }

    /// Decode primary factors from an unweighted price row.
    pub fn decode_row(&self, prices: &[f64]) -> Result<DVector<f64>> {
        self.solve_factors(&self.weights.weight_row(prices))
    }
}

/// Least-squares factor coordinates `(G G^T)^{-1} G (c - g0)` of a weighted
/// price vector.
pub fn solve_factors(
    g0: &DVector<f64>,
    basis: &DMatrix<f64>,
    weighted: &[f64],
) -> Result<DVector<f64>> {
    if weighted.len() != g0.len() {
        return Err(Error::Decomposition(format!(
            "price vector length {} vs basis width {}",
            weighted.len(),
            g0.len()
        )));
    }
    let gram = basis * basis.transpose();
    let rhs = basis * (DVector::from_column_slice(weighted) - g0);
    gram.clone()
        .lu()
        .solve(&rhs)
        .filter(|_| gram.determinant().abs() > 1e-300)
        .ok_or_else(|| Error::Decomposition("singular factor Gram matrix".into()))
}

/// Principal directions (descending variance, deterministic signs) of a
/// demeaned data matrix, via the eigendecomposition of `D^T D`.
fn principal_components(demeaned: &DMatrix<f64>) -> (Vec<DVector<f64>>, Vec<f64>) {
    let cov = demeaned.transpose() * demeaned;
    let eig = cov.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
    });
    let mut vecs = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for &i in &order {
        let mut v: DVector<f64> = eig.eigenvectors.column(i).into();
        // Deterministic sign: largest-magnitude entry positive.
        let mut k_max = 0;
        for k in 0..v.len() {
            if v[k].abs() > v[k_max].abs() {
                k_max = k;
            }
        }
        if v[k_max] < 0.0 {
            v = -v;
        }
        vecs.push(v);
        vals.push(eig.eigenvalues[i].max(0.0));
    }
    (vecs, vals)
}

/// Share of dates whose decoded 2- (or 3-)factor coordinates fall outside
/// the projected polytope; used as the direction-search objective.
struct SearchContext {
    /// Rows of `A Lambda^{-1}` applied to each candidate direction.
    a_w: DMatrix<f64>,
    b_base: DVector<f64>,
    tol: f64,
}

impl SearchContext {
    fn violation_count(&self, contributions: &[(&DVector<f64>, &DVector<f64>)]) -> usize {
        // contributions: per factor (a_w.dir [R], d.dir [L]).
        let r = self.b_base.len();
        let l = contributions[0].1.len();
        let mut count = 0usize;
        for t in 0..l {
            let mut ok = true;
            for row in 0..r {
                let mut lhs = 0.0;
                for (p, q) in contributions {
                    lhs += p[row] * q[t];
                }
                if lhs < self.b_base[row] - self.tol {
                    ok = false;
                    break;
                }
            }
            if !ok {
                count += 1;
            }
        }
        count
    }
}

/// Configuration for the primary decode.
#[derive(Debug, Clone)]
pub struct DecodeConfig {
    /// Number of primary factors (2 or 3).
    pub d_primary: usize,
    /// Number of secondary factors decoded from the residuals.
    pub d_secondary: usize,
    /// Principal components eligible for the direction search.
    pub search_span: usize,
    /// Grid resolution (points per half-turn) of the angle search.
    pub grid: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            d_primary: 2,
            d_secondary: 13,
            search_span: 10,
            grid: 181,
        }
    }
}

/// Decode primary factors from a surface panel.
pub fn decode_primary(
    panel: &SurfacePanel,
    weights: &VegaWeights,
    constraints: &ConstraintSystem,
    config: &DecodeConfig,
) -> Result<FactorModel> {
    let l = panel.num_rows();
    let n = panel.lattice.len();
    let d = config.d_primary;
    if !(d == 2 || d == 3) {
        return Err(Error::Decomposition(format!(
            "primary factor count must be 2 or 3, got {d}"
        )));
    }
    if l <= n {
        return Err(Error::Decomposition(format!(
            "need more dates than nodes to decode ({l} rows, {n} nodes)"
        )));
    }
    if weights.len() != n {
        return Err(Error::Decomposition(format!(
            "{} weights vs {n} nodes",
            weights.len()
        )));
    }

    // Weighted panel and its column means.
    let mut w = panel.prices.clone();
    for j in 0..n {
        let s = weights.lambdas[j];
        for i in 0..l {
            w[(i, j)] *= s;
        }
    }
    let g0 = DVector::from_iterator(n, (0..n).map(|j| w.column(j).mean()));
    let mut demeaned = w;
    for j in 0..n {
        let m = g0[j];
        for i in 0..l {
            demeaned[(i, j)] -= m;
        }
    }

    let (pcs, variances) = principal_components(&demeaned);
    let span = config.search_span.min(pcs.len());
    if span < d {
        return Err(Error::Decomposition(format!(
            "panel rank supports only {span} directions, need {d}"
        )));
    }
    let rel = variances[d - 1] / variances[0].max(1e-300);
    if !variances[0].is_finite() || variances[0] <= 0.0 || rel < 1e-14 {
        return Err(Error::Decomposition(
            "rank-deficient panel: too few independent surface movements".into(),
        ));
    }

    // Precompute projections of PCs through the weighted constraint matrix
    // and through the data.
    let mut a_w = constraints.a.clone();
    for j in 0..n {
        let s = weights.mean_vegas[j]; // Lambda^{-1} entries
        for i in 0..a_w.nrows() {
            a_w[(i, j)] *= s;
        }
    }
    let b_base = &constraints.b - &a_w * &g0;
    let ctx = SearchContext {
        a_w: a_w.clone(),
        b_base,
        tol: crate::static_arbitrage::DETECT_TOL,
    };

    let pc_a: Vec<DVector<f64>> = pcs[..span].iter().map(|v| &ctx.a_w * v).collect();
    let pc_q: Vec<DVector<f64>> = pcs[..span].iter().map(|v| &demeaned * v).collect();

    // Factor 1: statistical accuracy (leading principal direction).
    let u1 = pcs[0].clone();
    let (a1, q1) = (pc_a[0].clone(), pc_q[0].clone());

    // Factor 2: direction in span(pc_2..pc_span) minimizing the violating
    // date count of the 2-factor decode; explained variance breaks ties.
    let mut alpha = vec![0.0; span - 1];
    alpha[0] = 1.0;
    for other in 1..span - 1 {
        alpha = best_rotation(&alpha, other, config.grid, |cand| {
            let (a2, q2) = combine(cand, &pc_a[1..], &pc_q[1..]);
            let count = ctx.violation_count(&[(&a1, &q1), (&a2, &q2)]);
            let var = q2.norm_squared();
            (count, -var)
        });
    }
    let (a2, q2) = combine(&alpha, &pc_a[1..], &pc_q[1..]);
    let u2 = combine_dirs(&alpha, &pcs[1..span]);

    let mut rows: Vec<DVector<f64>> = vec![u1, u2];
    if d == 3 {
        // Residual span: components of pc_2.. orthogonal to u2.
        let mut residual_span: Vec<DVector<f64>> = Vec::new();
        for v in &pcs[1..span] {
            let mut r = v.clone();
            r -= &rows[1] * rows[1].dot(v);
            for prev in &residual_span {
                r -= prev * prev.dot(&r);
            }
            let norm = r.norm();
            if norm > 1e-8 {
                residual_span.push(r / norm);
            }
        }
        if residual_span.is_empty() {
            return Err(Error::Decomposition(
                "no residual span available for the third factor".into(),
            ));
        }
        let r_a: Vec<DVector<f64>> = residual_span.iter().map(|v| &ctx.a_w * v).collect();
        let r_q: Vec<DVector<f64>> = residual_span.iter().map(|v| &demeaned * v).collect();
        // Minimize the dynamic-arbitrage residual of the 3-factor decode on
        // a date subsample; variance breaks ties (scaled to stay secondary).
        let stride = (l / 100).max(1);
        let mut alpha3 = vec![0.0; residual_span.len()];
        alpha3[0] = 1.0;
        let base_rows = rows.clone();
        for other in 1..residual_span.len() {
            alpha3 = best_rotation(&alpha3, other, 61, |cand| {
                let u3 = combine_dirs(cand, &residual_span);
                let q3 = combine(cand, &r_a, &r_q).1;
                let mut trial_rows = base_rows.clone();
                trial_rows.push(u3);
                let pda = metrics::pda_for_directions(
                    panel, weights, &g0, &trial_rows, &demeaned, stride,
                );
                let key = (pda.unwrap_or(f64::INFINITY) * 1e9).round() as usize;
                (key, -q3.norm_squared())
            });
        }
        rows.push(combine_dirs(&alpha3, &residual_span));
    }

    let mut basis = DMatrix::zeros(d, n);
    for (i, row) in rows.iter().enumerate() {
        for j in 0..n {
            basis[(i, j)] = row[j];
        }
    }

    // Factor series by least squares; orthonormal rows make this the plain
    // projection, but the general formula guards against drift.
    let gram = &basis * basis.transpose();
    let gram_inv = gram
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Decomposition("singular factor Gram matrix".into()))?;
    let series = (&demeaned * basis.transpose()) * gram_inv;
    let residuals = &demeaned - &series * &basis;

    let projected = FactorConstraintSystem::project(constraints, &weights.mean_vegas, &basis, &g0)?;
    let factor_constraints = eliminate_redundant(&projected)?;

    let mut arbitrage_flagged = Vec::with_capacity(l);
    let mut any_inside = false;
    for t in 0..l {
        let xi: Vec<f64> = (0..d).map(|k| series[(t, k)]).collect();
        let inside = factor_constraints.contains(&xi, crate::static_arbitrage::DETECT_TOL);
        any_inside |= inside;
        arbitrage_flagged.push(!inside);
    }
    if !any_inside {
        return Err(Error::Decomposition(
            "no decoded date lies inside the factor polytope".into(),
        ));
    }
    let _ = (a2, q2);

    Ok(FactorModel {
        g0,
        basis,
        secondary_basis: DMatrix::zeros(0, n),
        primary_series: series,
        secondary_series: DMatrix::zeros(l, 0),
        residuals,
        arbitrage_flagged,
        weights: weights.clone(),
        factor_constraints,
        lattice: panel.lattice.clone(),
    })
}

/// Linear combination of projected vectors for a coefficient vector.
fn combine(
    alpha: &[f64],
    proj_a: &[DVector<f64>],
    proj_q: &[DVector<f64>],
) -> (DVector<f64>, DVector<f64>) {
    let mut a = DVector::zeros(proj_a[0].len());
    let mut q = DVector::zeros(proj_q[0].len());
    for (k, &c) in alpha.iter().enumerate() {
        if c != 0.0 {
            a += &proj_a[k] * c;
            q += &proj_q[k] * c;
        }
    }
    (a, q)
}

fn combine_dirs(alpha: &[f64], dirs: &[DVector<f64>]) -> DVector<f64> {
    let mut u = DVector::zeros(dirs[0].len());
    for (k, &c) in alpha.iter().enumerate() {
        if c != 0.0 {
            u += &dirs[k] * c;
        }
    }
    u
}

/// Grid search (with a refinement pass) over the rotation angle mixing the
/// current coefficient vector with basis director `other`; returns the best
/// coefficient vector under the lexicographic objective.
fn best_rotation<F>(alpha: &[f64], other: usize, grid: usize, mut objective: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> (usize, f64),
{
    let rotate = |alpha: &[f64], phi: f64| -> Vec<f64> {
        let (s, c) = phi.sin_cos();
        let mut out: Vec<f64> = alpha.iter().map(|v| v * c).collect();
        out[other] += s;
        out
    };
    let mut best_phi = 0.0;
    let mut best = objective(alpha);
    let half_pi = std::f64::consts::FRAC_PI_2;
    for i in 0..grid {
        let phi = -half_pi + std::f64::consts::PI * i as f64 / grid as f64;
        let cand = rotate(alpha, phi);
        let val = objective(&cand);
        if val < best {
            best = val;
            best_phi = phi;
        }
    }
    // Refinement around the best grid point.
    let step = std::f64::consts::PI / grid as f64;
    for i in 0..21 {
        let phi = best_phi - step + 2.0 * step * i as f64 / 20.0;
        let cand = rotate(alpha, phi);
        let val = objective(&cand);
        if val < best {
            best = val;
            best_phi = phi;
        }
    }
    let mut out = rotate(alpha, best_phi);
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Decode secondary factors as principal components of the residuals.
pub fn decode_secondary(model: &FactorModel, d_secondary: usize) -> Result<FactorModel> {
    let n = model.residuals.ncols();
    let l = model.residuals.nrows();
    if d_secondary > n.min(l) {
        return Err(Error::Decomposition(format!(
            "{d_secondary} secondary factors exceed the residual rank bound {}",
            n.min(l)
        )));
    }
    let mut out = model.clone();
    if d_secondary == 0 {
        out.secondary_basis = DMatrix::zeros(0, n);
        out.secondary_series = DMatrix::zeros(l, 0);
        return Ok(out);
    }
    let (pcs, _) = principal_components(&model.residuals);
    let mut basis = DMatrix::zeros(d_secondary, n);
    for i in 0..d_secondary {
        for j in 0..n {
            basis[(i, j)] = pcs[i][j];
        }
    }
    let series = &model.residuals * basis.transpose();
    out.residuals = &model.residuals - &series * &basis;
    out.secondary_basis = basis;
    out.secondary_series = series;
    Ok(out)
}

/// Full decode: primary factors, then secondary factors from the residuals.
pub fn decode(
    panel: &SurfacePanel,
    weights: &VegaWeights,
    constraints: &ConstraintSystem,
    config: &DecodeConfig,
) -> Result<FactorModel> {
    let primary = decode_primary(panel, weights, constraints, config)?;
    decode_secondary(&primary, config.d_secondary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{LatticeNode, DT_DAY};
    use crate::static_arbitrage::build_constraints;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn vega_hand_values() {
        assert_abs_diff_eq!(vega(0.25, 0.0, 0.2).unwrap(), 0.199222, epsilon = 1e-6);
        assert_abs_diff_eq!(vega(1.0, 0.0, 0.2).unwrap(), 0.396953, epsilon = 1e-6);
        // Density symmetry: the m producing the reflected argument gives the
        // same vega.
        let m_star = 2.0 * 0.05 * (0.2 * 0.5);
        assert_abs_diff_eq!(
            vega(0.25, m_star, 0.2).unwrap(),
            0.199222,
            epsilon = 1e-6
        );
        assert!(vega(0.0, 0.0, 0.2).is_err());
        assert!(vega(0.25, 0.0, 0.0).is_err());
    }

    #[test]
    fn solve_factors_hand_case() {
        // d = 1, G = [1 1], g0 = 0, c = (0.3, 0.5): xi = 0.4.
        let g0 = DVector::zeros(2);
        let basis = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let xi = solve_factors(&g0, &basis, &[0.3, 0.5]).unwrap();
        assert_abs_diff_eq!(xi[0], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn solve_factors_exact_on_range() {
        let g0 = DVector::from_vec(vec![0.2, 0.1, 0.4]);
        let basis = DMatrix::from_row_slice(2, 3, &[0.6, 0.0, 0.8, 0.0, 1.0, 0.0]);
        let xi0 = [0.7, -0.3];
        let c: Vec<f64> = (0..3)
            .map(|j| g0[j] + basis[(0, j)] * xi0[0] + basis[(1, j)] * xi0[1])
            .collect();
        let xi = solve_factors(&g0, &basis, &c).unwrap();
        assert_abs_diff_eq!(xi[0], xi0[0], epsilon = 1e-12);
        assert_abs_diff_eq!(xi[1], xi0[1], epsilon = 1e-12);
    }

    /// A small panel with planted two-factor structure.
    fn planted_panel(l: usize, noise: f64, seed: u64) -> (SurfacePanel, DMatrix<f64>) {
        let mut nodes = Vec::new();
        for &d in &[30u32, 91, 365] {
            let tau = f64::from(d) * DT_DAY;
            for i in 0..4 {
                let m = -0.06 + 0.04 * i as f64;
                nodes.push(LatticeNode {
                    tau,
                    m,
                    delta_label: 0.65 - 0.1 * i as f64,
                });
            }
        }
        let lattice = LiquidLattice::new(nodes).unwrap();
        let n = lattice.len();
        // Base surface from a flat-vol model; two smooth planted basis rows.
        let base: Vec<f64> = lattice
            .nodes()
            .iter()
            .map(|nd| bs::price(0.2, nd.tau, nd.m))
            .collect();
        let mut planted = DMatrix::zeros(2, n);
        for (j, nd) in lattice.nodes().iter().enumerate() {
            planted[(0, j)] = bs::vega(0.2, nd.tau, nd.m);
            planted[(1, j)] = nd.m * nd.tau.sqrt();
        }
        // Orthonormalize the planted rows.
        let r0 = planted.row(0).norm();
        for j in 0..n {
            planted[(0, j)] /= r0;
        }
        let dot = planted.row(0).dot(&planted.row(1));
        for j in 0..n {
            let v = planted[(1, j)] - dot * planted[(0, j)];
            planted[(1, j)] = v;
        }
        let r1 = planted.row(1).norm();
        for j in 0..n {
            planted[(1, j)] /= r1;
        }
        let mut rng = crate::rng::namespaced_rng(seed, crate::rng::StreamKind::Test, 0);
        let mut prices = DMatrix::zeros(l, n);
        for t in 0..l {
            let x1 = 0.015 * (t as f64 / l as f64 - 0.5) + 0.002 * rng.gen::<f64>();
            let x2 = 0.004 * ((t as f64) * 0.13).sin() + 0.001 * rng.gen::<f64>();
            for j in 0..n {
                let eps: f64 = rng.sample(StandardNormal);
                prices[(t, j)] = (base[j]
                    + x1 * planted[(0, j)]
                    + x2 * planted[(1, j)]
                    + noise * eps)
                    .clamp(1e-6, 1.0 - 1e-6);
            }
        }
        let dates: Vec<NaiveDate> = (0..l)
            .map(|i| NaiveDate::from_ymd_opt(2015, 1, 1).unwrap() + chrono::Days::new(i as u64))
            .collect();
        let panel = SurfacePanel::new(
            lattice,
            dates,
            vec!["U".into(); l],
            vec![100.0; l],
            prices,
            DT_DAY,
        )
        .unwrap();
        (panel, planted)
    }

    #[test]
    fn planted_two_factor_span_recovered() {
        let (panel, planted) = planted_panel(40, 0.0, 7);
        let weights = VegaWeights::identity(panel.lattice.len());
        let constraints = build_constraints(&panel.lattice).unwrap();
        let config = DecodeConfig {
            d_primary: 2,
            d_secondary: 0,
            ..DecodeConfig::default()
        };
        let model = decode_primary(&panel, &weights, &constraints, &config).unwrap();
        // Principal angles between recovered and planted spans.
        let cross = &model.basis * planted.transpose();
        let svd = cross.svd(false, false);
        for s in svd.singular_values.iter() {
            let angle = s.min(1.0).acos();
            assert!(angle < 1e-6, "principal angle {angle}");
        }
        // Reconstruction identity.
        let recon = {
            let ones = DVector::from_element(panel.num_rows(), 1.0);
            &ones * model.g0.transpose()
                + &model.primary_series * &model.basis
                + &model.residuals
        };
        let mut w = panel.prices.clone();
        for j in 0..panel.lattice.len() {
            for i in 0..panel.num_rows() {
                w[(i, j)] *= weights.lambdas[j];
            }
        }
        assert!((recon - w).norm() < 1e-10);
    }

    #[test]
    fn constant_panel_rejected_as_rank_deficient() {
        let (panel, _) = planted_panel(40, 0.0, 3);
        let flat = DMatrix::from_element(panel.num_rows(), panel.lattice.len(), 0.3);
        let panel = SurfacePanel::new(
            panel.lattice.clone(),
            panel.dates.clone(),
            panel.labels.clone(),
            panel.spots.clone(),
            flat,
            DT_DAY,
        )
        .unwrap();
        let weights = VegaWeights::identity(panel.lattice.len());
        let constraints = build_constraints(&panel.lattice).unwrap();
        let config = DecodeConfig {
            d_primary: 2,
            d_secondary: 0,
            ..DecodeConfig::default()
        };
        assert!(matches!(
            decode_primary(&panel, &weights, &constraints, &config),
            Err(Error::Decomposition(_))
        ));
    }

    #[test]
    fn secondary_factors_absorb_residual_rank() {
        let (panel, _) = planted_panel(40, 1e-4, 11);
        let weights = VegaWeights::identity(panel.lattice.len());
        let constraints = build_constraints(&panel.lattice).unwrap();
        let config = DecodeConfig {
            d_primary: 2,
            d_secondary: 0,
            ..DecodeConfig::default()
        };
        let model = decode_primary(&panel, &weights, &constraints, &config).unwrap();
        let with_sec = decode_secondary(&model, 4).unwrap();
        // Residual norm can only shrink.
        assert!(with_sec.residuals.norm() <= model.residuals.norm() + 1e-12);
        // Zero residuals give zero secondary series.
        let mut zero_model = model.clone();
        zero_model.residuals.fill(0.0);
        let z = decode_secondary(&zero_model, 2).unwrap();
        assert!(z.secondary_series.norm() < 1e-12);
        // Requesting more factors than the rank bound errors out.
        assert!(decode_secondary(&model, 10_000).is_err());
    }

    #[test]
    fn rank_one_residual_fully_recovered() {
        let (panel, _) = planted_panel(50, 0.0, 13);
        let weights = VegaWeights::identity(panel.lattice.len());
        let constraints = build_constraints(&panel.lattice).unwrap();
        let config = DecodeConfig {
            d_primary: 2,
            d_secondary: 0,
            ..DecodeConfig::default()
        };
        let mut model = decode_primary(&panel, &weights, &constraints, &config).unwrap();
        // Plant a rank-one residual orthogonal to the basis.
        let n = panel.lattice.len();
        let mut dir = DVector::from_fn(n, |j, _| ((j as f64) * 0.7).cos());
        for r in 0..model.basis.nrows() {
            let row: DVector<f64> = model.basis.row(r).transpose();
            dir -= &row * row.dot(&dir);
        }
        dir /= dir.norm();
        let l = panel.num_rows();
        let mut resid = DMatrix::zeros(l, n);
        for t in 0..l {
            let s = 1e-3 * ((t as f64) * 0.31).sin();
            for j in 0..n {
                resid[(t, j)] = s * dir[j];
            }
        }
        model.residuals = resid;
        let out = decode_secondary(&model, 1).unwrap();
        assert!(out.residuals.norm() < 1e-12);
        assert!(out.secondary_series.column(0).norm() > 0.0);
    }
}
