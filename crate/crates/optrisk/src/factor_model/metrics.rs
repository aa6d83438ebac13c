//! Reconstruction-quality metrics: MAPE, PSAS and the dynamic-arbitrage
//! residual (PDA).

use nalgebra::{DMatrix, DVector};

use super::{FactorModel, VegaWeights};
use crate::error::{Error, Result};
use crate::market_data::{LiquidLattice, SurfacePanel};
use crate::math::spline::CubicSpline;
use crate::static_arbitrage::DETECT_TOL;

/// Summary of how well a factor model reproduces its panel.
#[derive(Debug, Clone)]
pub struct ReconstructionMetrics {
    /// Mean absolute percentage error of the weighted reconstruction.
    pub mape: f64,
    /// Share of dates whose decoded primary factors violate the polytope.
    pub psas: f64,
    /// Mean relative residual of the market-price-of-risk system.
    pub pda: f64,
    /// Min-max range of each secondary factor over that of the first
    /// primary factor (unit-norm basis rows).
    pub magnitude_ratios: Vec<f64>,
}

/// Dynamics inputs for the PDA computation. When absent, sample estimates
/// from the panel are used (constant drift and diffusion per the factor
/// increments, per-label index volatility).
#[derive(Debug, Clone)]
pub struct PdaInputs {
    /// Index volatility per date.
    pub gamma: Vec<f64>,
    /// Factor drift per date, L x d.
    pub mu: DMatrix<f64>,
    /// Factor diffusion per date; one shared matrix or one per date.
    pub sigma: Vec<DMatrix<f64>>,
}

impl PdaInputs {
    fn sigma_at(&self, t: usize) -> &DMatrix<f64> {
        if self.sigma.len() == 1 {
            &self.sigma[0]
        } else {
            &self.sigma[t]
        }
    }
}

/// Sample-based PDA inputs: constant per-label drift/diffusion of the
/// factor increments and per-label realized index volatility.
pub fn sample_dynamics(panel: &SurfacePanel, series: &DMatrix<f64>) -> Result<PdaInputs> {
    let l = panel.num_rows();
    let d = series.ncols();
    let dt = panel.dt;
    let mut mu = DMatrix::zeros(l, d);
    let mut gamma = vec![0.0; l];
    let mut increments: Vec<DVector<f64>> = Vec::new();
    for (_, span) in panel.label_spans() {
        let idx: Vec<usize> = span.clone().collect();
        if idx.len() < 3 {
            return Err(Error::Metric(
                "need at least 3 dates per label for sample dynamics".into(),
            ));
        }
        // Factor drift within the label.
        let mut mean = DVector::zeros(d);
        for w in idx.windows(2) {
            let diff = series.row(w[1]) - series.row(w[0]);
            mean += diff.transpose() / dt;
        }
        mean /= (idx.len() - 1) as f64;
        for &t in &idx {
            for k in 0..d {
                mu[(t, k)] = mean[k];
            }
        }
        for w in idx.windows(2) {
            let diff = (series.row(w[1]) - series.row(w[0])).transpose() / dt.sqrt();
            increments.push(diff);
        }
        // Index volatility from log returns.
        let rets: Vec<f64> = idx
            .windows(2)
            .map(|w| (panel.spots[w[1]] / panel.spots[w[0]]).ln())
            .collect();
        let mean_r = rets.iter().sum::<f64>() / rets.len() as f64;
        let var = rets.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>() / rets.len() as f64;
        let g = (var / dt).sqrt().max(1e-6);
        for &t in &idx {
            gamma[t] = g;
        }
    }
    // Pooled diffusion: covariance of sqrt(dt)-scaled increments.
    let mut cov = DMatrix::zeros(d, d);
    for inc in &increments {
        cov += inc * inc.transpose();
    }
    cov /= increments.len() as f64;
    let sigma = cov
        .cholesky()
        .map(|c| c.l())
        .unwrap_or_else(|| DMatrix::identity(d, d) * 1e-6);
    Ok(PdaInputs {
        gamma,
        mu,
        sigma: vec![sigma],
    })
}

/// Differential operator applied to one unweighted surface row:
/// `z = (-d/dtau - gamma^2/2 d/dm + gamma^2/2 d^2/dm^2) c`.
pub(crate) fn z_vector(lattice: &LiquidLattice, prices: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let groups = lattice.expiry_groups();
    let mut splines: Vec<Option<CubicSpline>> = Vec::with_capacity(groups.len());
    for g in &groups {
        if g.range.len() >= 2 {
            let xs: Vec<f64> = lattice.nodes()[g.range.clone()].iter().map(|n| n.m).collect();
            let ys: Vec<f64> = prices[g.range.clone()].to_vec();
            splines.push(Some(CubicSpline::new(xs, ys)?));
        } else {
            splines.push(None);
        }
    }
    let half_g2 = 0.5 * gamma * gamma;
    let mut z = vec![0.0; lattice.len()];
    for (gi, g) in groups.iter().enumerate() {
        for j in g.range.clone() {
            let m = lattice.nodes()[j].m;
            let (dm, d2m) = match &splines[gi] {
                Some(s) => (s.deriv1(m)?, s.deriv2(m)?),
                None => (0.0, 0.0),
            };
            // Expiry derivative by finite difference across groups,
            // evaluated at this node's moneyness.
            let eval = |k: usize| -> f64 {
                match &splines[k] {
                    Some(s) => s.eval_extended(m),
                    None => prices[groups[k].range.start],
                }
            };
            let dtau = if groups.len() == 1 {
                0.0
            } else if gi == 0 {
                (eval(1) - eval(0)) / (groups[1].tau - groups[0].tau)
            } else if gi == groups.len() - 1 {
                (eval(gi) - eval(gi - 1)) / (groups[gi].tau - groups[gi - 1].tau)
            } else {
                (eval(gi + 1) - eval(gi - 1)) / (groups[gi + 1].tau - groups[gi - 1].tau)
            };
            z[j] = -dtau - half_g2 * dm + half_g2 * d2m;
        }
    }
    Ok(z)
}

/// Relative residual of the market-price-of-risk system at one date:
/// `|| G^T sigma psi* - (G^T mu - z) || / || G^T mu - z ||` with the
/// minimum-norm least-squares `psi*`.
fn pda_at_date(
    basis: &DMatrix<f64>,
    weighted_z: &DVector<f64>,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
) -> Result<f64> {
    let a_sys = basis.transpose() * sigma; // N x d
    let rhs = basis.transpose() * mu - weighted_z;
    let denom = rhs.norm();
    let svd = a_sys.clone().svd(true, true);
    let psi = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Metric(format!("least-squares solve failed: {e}")))?;
    let num = (a_sys * psi - rhs).norm();
    if denom < 1e-14 {
        if num < 1e-12 {
            return Ok(0.0);
        }
        return Err(Error::Metric(
            "market-price-of-risk residual has zero denominator".into(),
        ));
    }
    Ok(num / denom)
}

/// Compute all reconstruction metrics for a decoded model.
pub fn metrics(
    model: &FactorModel,
    panel: &SurfacePanel,
    dynamics: Option<&PdaInputs>,
) -> Result<ReconstructionMetrics> {
    let l = panel.num_rows();
    let n = panel.lattice.len();
    let d = model.d_primary();

    // Weighted MAPE over all entries.
    let mut mape = 0.0;
    for t in 0..l {
        let xi: Vec<f64> = (0..d).map(|k| model.primary_series[(t, k)]).collect();
        let xs: Vec<f64> = (0..model.d_secondary())
            .map(|k| model.secondary_series[(t, k)])
            .collect();
        let recon = model.reconstruct_weighted(&xi, Some(&xs));
        for j in 0..n {
            let w = panel.prices[(t, j)] * model.weights.lambdas[j];
            if !(w > 0.0) {
                return Err(Error::Metric(format!(
                    "weighted price is zero at date {t}, node {j}"
                )));
            }
            mape += ((w - recon[j]) / w).abs();
        }
    }
    mape /= (l * n) as f64;

    // PSAS on the primary factor series.
    let mut violating = 0usize;
    for t in 0..l {
        let xi: Vec<f64> = (0..d).map(|k| model.primary_series[(t, k)]).collect();
        if !model.factor_constraints.contains(&xi, DETECT_TOL) {
            violating += 1;
        }
    }
    let psas = violating as f64 / l as f64;

    // PDA with supplied or sample dynamics.
    let sample;
    let dyn_inputs = match dynamics {
        Some(d) => d,
        None => {
            sample = sample_dynamics(panel, &model.primary_series)?;
            &sample
        }
    };
    let mut pda = 0.0;
    for t in 0..l {
        let xi: Vec<f64> = (0..d).map(|k| model.primary_series[(t, k)]).collect();
        let xs: Vec<f64> = (0..model.d_secondary())
            .map(|k| model.secondary_series[(t, k)])
            .collect();
        let prices = model.reconstruct_prices(&xi, Some(&xs));
        let z = z_vector(&panel.lattice, &prices, dyn_inputs.gamma[t])?;
        let weighted_z = DVector::from_iterator(
            n,
            z.iter().zip(&model.weights.lambdas).map(|(v, l)| v * l),
        );
        let mu: DVector<f64> = dyn_inputs.mu.row(t).transpose();
        pda += pda_at_date(&model.basis, &weighted_z, &mu, dyn_inputs.sigma_at(t))?;
    }
    pda /= l as f64;

    // Secondary factor magnitude over the first primary factor.
    let range = |col: nalgebra::DVectorView<f64>| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in col.iter() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        hi - lo
    };
    let primary_range = range(model.primary_series.column(0));
    let magnitude_ratios: Vec<f64> = (0..model.d_secondary())
        .map(|k| range(model.secondary_series.column(k)) / primary_range)
        .collect();

    Ok(ReconstructionMetrics {
        mape,
        psas,
        pda,
        magnitude_ratios,
    })
}

/// PDA of a trial basis during the third-factor direction search; strided
/// over dates for speed, with sample dynamics.
pub(crate) fn pda_for_directions(
    panel: &SurfacePanel,
    weights: &VegaWeights,
    g0: &DVector<f64>,
    rows: &[DVector<f64>],
    demeaned: &DMatrix<f64>,
    stride: usize,
) -> Result<f64> {
    let n = panel.lattice.len();
    let d = rows.len();
    let mut basis = DMatrix::zeros(d, n);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..n {
            basis[(i, j)] = r[j];
        }
    }
    let series = demeaned * basis.transpose();
    let dyn_inputs = sample_dynamics(panel, &series)?;
    let l = panel.num_rows();
    let mut pda = 0.0;
    let mut count = 0usize;
    let mut t = 0usize;
    while t < l {
        let xi: Vec<f64> = (0..d).map(|k| series[(t, k)]).collect();
        let recon_w = {
            let mut w = g0.clone();
            w += basis.transpose() * DVector::from_column_slice(&xi);
            w
        };
        let prices: Vec<f64> = recon_w
            .iter()
            .zip(&weights.mean_vegas)
            .map(|(w, v)| w * v)
            .collect();
        let z = z_vector(&panel.lattice, &prices, dyn_inputs.gamma[t])?;
        let weighted_z =
            DVector::from_iterator(n, z.iter().zip(&weights.lambdas).map(|(v, l)| v * l));
        let mu: DVector<f64> = dyn_inputs.mu.row(t).transpose();
        pda += pda_at_date(&basis, &weighted_z, &mu, dyn_inputs.sigma_at(t))?;
        count += 1;
        t += stride;
    }
    Ok(pda / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{LatticeNode, DT_DAY};
    use crate::static_arbitrage::FactorConstraintSystem;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;

    /// Hand-built model on a 2-node lattice where the system is square.
    fn square_model() -> (FactorModel, SurfacePanel) {
        let lattice = LiquidLattice::new(vec![
            LatticeNode {
                tau: 0.25,
                m: -0.02,
                delta_label: 0.6,
            },
            LatticeNode {
                tau: 0.25,
                m: 0.02,
                delta_label: 0.4,
            },
        ])
        .unwrap();
        let l = 6;
        let g0 = DVector::from_vec(vec![0.05, 0.03]);
        let basis = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let mut series = DMatrix::zeros(l, 2);
        let mut prices = DMatrix::zeros(l, 2);
        for t in 0..l {
            series[(t, 0)] = 0.001 * t as f64;
            series[(t, 1)] = -0.0005 * t as f64;
            prices[(t, 0)] = g0[0] + series[(t, 0)];
            prices[(t, 1)] = g0[1] + series[(t, 1)];
        }
        let residuals = DMatrix::zeros(l, 2);
        let constraints = FactorConstraintSystem {
            a_proj: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            b: DVector::from_vec(vec![-1.0, -1.0]),
            redundancy_removed: true,
        };
        let weights = VegaWeights::identity(2);
        let dates: Vec<NaiveDate> = (0..l)
            .map(|i| NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i as u64))
            .collect();
        let panel = SurfacePanel::new(
            lattice.clone(),
            dates,
            vec!["U".into(); l],
            vec![100.0; l],
            prices,
            DT_DAY,
        )
        .unwrap();
        let model = FactorModel {
            g0,
            basis,
            secondary_basis: DMatrix::zeros(0, 2),
            primary_series: series,
            secondary_series: DMatrix::zeros(l, 0),
            residuals,
            arbitrage_flagged: vec![false; l],
            weights,
            factor_constraints: constraints,
            lattice,
        };
        (model, panel)
    }

    #[test]
    fn exact_reconstruction_gives_zero_mape_and_psas() {
        let (model, panel) = square_model();
        let m = metrics(&model, &panel, None).unwrap();
        assert_abs_diff_eq!(m.mape, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.psas, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn square_nonsingular_system_gives_zero_pda() {
        // With N = d and an invertible G^T sigma, the least-squares solve
        // is exact at every date.
        let (model, panel) = square_model();
        let m = metrics(&model, &panel, None).unwrap();
        assert_abs_diff_eq!(m.pda, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn psas_counts_outside_dates() {
        let (mut model, panel) = square_model();
        // Shrink the polytope: xi_2 >= -0.0006 cuts off dates t >= 2 of the
        // series xi_2(t) = -0.0005 t.
        model.factor_constraints.b = DVector::from_vec(vec![-1.0, -0.0006]);
        let m = metrics(&model, &panel, None).unwrap();
        assert_abs_diff_eq!(m.psas, 4.0 / 6.0, epsilon = 1e-12);
    }
}
