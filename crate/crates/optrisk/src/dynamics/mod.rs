//! Constrained diffusion dynamics for the decoded factors and the
//! underlying index.
//!
//! The factor drift and diffusion are rectifier networks whose raw outputs
//! pass through a boundary transform: diffusion components normal to any
//! nearby polytope facet are damped linearly in the facet distance, and the
//! drift receives the minimal inward correction enforcing the
//! non-attainability inequality `2 (a.mu) dist >= ||a.sigma||^2`, so the
//! continuous dynamics cannot leave the no-arbitrage region.

pub mod garch;
pub mod mlp;
mod train;

pub use garch::{fit_garch11, GarchFit};
pub use mlp::{AdamState, Mlp, MlpGrads};
pub use train::{
    train_factor_sde, train_index_vol, train_joint_sde, JointDynamics, TrainConfig, TrainReport,
};

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::static_arbitrage::FactorConstraintSystem;

/// Drift/diffusion pair at a factor state.
pub type Coefficients = (DVector<f64>, DMatrix<f64>);

/// Record of the boundary transform needed to reverse-differentiate it.
pub(crate) struct TransformTape {
    /// Damping matrix applied on the left of the raw diffusion.
    pub damping: DMatrix<f64>,
    /// Applied drift corrections in order: (facet index, distance).
    pub corrections: Vec<(usize, f64)>,
}

/// Apply the boundary transform to raw network outputs at state `xi`.
///
/// `raw_sigma` has the factor rows of the diffusion (d x w, where w = d or
/// d+1 in the joint variant). Facets are the unit-normal rows of the
/// constraint system; `eps_b` is the damping length. States outside the
/// polytope are a domain error.
pub fn transform_outputs(
    constraints: &FactorConstraintSystem,
    eps_b: f64,
    xi: &[f64],
    raw_mu: &DVector<f64>,
    raw_sigma: &DMatrix<f64>,
) -> Result<Coefficients> {
    let (mu, sigma, _) = transform_with_tape(constraints, eps_b, xi, raw_mu, raw_sigma)?;
    Ok((mu, sigma))
}

pub(crate) fn transform_with_tape(
    constraints: &FactorConstraintSystem,
    eps_b: f64,
    xi: &[f64],
    raw_mu: &DVector<f64>,
    raw_sigma: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>, TransformTape)> {
    let d = constraints.dim();
    assert_eq!(raw_mu.len(), d);
    assert_eq!(raw_sigma.nrows(), d);
    let dists = constraints.facet_distances(xi);
    if let Some((i, dist)) = dists
        .iter()
        .enumerate()
        .find(|(_, v)| **v < 0.0)
        .map(|(i, v)| (i, *v))
    {
        return Err(Error::domain(
            "xi",
            format!("state outside polytope: facet {i} distance {dist:e}"),
        ));
    }

    // Diffusion damping: product over near facets of (I - (1-c) a a^T).
    let mut damping = DMatrix::identity(d, d);
    for (i, &dist) in dists.iter().enumerate() {
        if dist < eps_b {
            let c = (dist / eps_b).clamp(0.0, 1.0);
            let a: DVector<f64> = constraints.a_proj.row(i).transpose();
            let proj = &a * a.transpose();
            damping = damping * (DMatrix::identity(d, d) - proj * (1.0 - c));
        }
    }
    let sigma = &damping * raw_sigma;

    // Drift correction sweeps: push the facet-normal drift up to the
    // non-attainability threshold; repeat because corrections along one
    // facet can reduce another's normal component when normals interact.
    let mut mu = raw_mu.clone();
    let mut corrections: Vec<(usize, f64)> = Vec::new();
    for _sweep in 0..32 {
        let mut changed = false;
        for (i, &dist) in dists.iter().enumerate() {
            if dist >= eps_b || dist <= 0.0 {
                continue;
            }
            let a: DVector<f64> = constraints.a_proj.row(i).transpose();
            let a_sig = sigma.transpose() * &a;
            let threshold = a_sig.norm_squared() / (2.0 * dist);
            let alpha = threshold - a.dot(&mu);
            if alpha > 1e-14 {
                mu += &a * alpha;
                corrections.push((i, dist));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    Ok((mu, sigma, TransformTape { damping, corrections }))
}

/// Reverse-mode pass through the transform: given gradients with respect to
/// the transformed outputs, produce gradients with respect to the raw ones.
pub(crate) fn transform_backward(
    constraints: &FactorConstraintSystem,
    tape: &TransformTape,
    sigma: &DMatrix<f64>,
    grad_mu: &DVector<f64>,
    grad_sigma: &DMatrix<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let mut g_mu = grad_mu.clone();
    let mut g_sigma = grad_sigma.clone();
    // Corrections in reverse: mu_out = mu_in + max(0, s/(2 dist) - a.mu_in) a
    // with s = ||a^T sigma||^2 and sigma fixed across sweeps.
    for &(i, dist) in tape.corrections.iter().rev() {
        let a: DVector<f64> = constraints.a_proj.row(i).transpose();
        let h = a.dot(&g_mu);
        // d(threshold)/d(sigma) = a (a^T sigma) / dist.
        let a_sig = sigma.transpose() * &a; // w-vector
        g_sigma += (&a * a_sig.transpose()) * (h / dist);
        g_mu -= &a * h;
    }
    let g_raw_sigma = tape.damping.transpose() * g_sigma;
    (g_mu, g_raw_sigma)
}

/// Map the diffusion-net output vector into the lower-triangular factor
/// block (softplus on the diagonal), with optional joint column.
pub(crate) fn lower_triangular_from_raw(raw: &[f64], d: usize, joint: bool) -> DMatrix<f64> {
    let w = if joint { d + 1 } else { d };
    let mut l = DMatrix::zeros(d, w);
    let mut idx = 0usize;
    for i in 0..d {
        for j in 0..=i {
            let col = if joint { j + 1 } else { j };
            l[(i, col)] = if i == j { softplus(raw[idx]) } else { raw[idx] };
            idx += 1;
        }
    }
    if joint {
        for (i, item) in raw[idx..idx + d].iter().enumerate() {
            l[(i, 0)] = *item;
        }
    }
    l
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn softplus_deriv(x: f64) -> f64 {
    if x > 30.0 {
        1.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

/// Affine input standardization learned from the training sample; factor
/// states pass through this before the networks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardizer {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            offset: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Fit mean/std per coordinate over sample rows.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut offset = vec![0.0; dim];
        for r in rows {
            for (o, v) in offset.iter_mut().zip(r) {
                *o += v / n;
            }
        }
        let mut scale = vec![0.0; dim];
        for r in rows {
            for k in 0..dim {
                scale[k] += (r[k] - offset[k]).powi(2) / n;
            }
        }
        for s in &mut scale {
            *s = s.sqrt().max(1e-8);
        }
        Self { offset, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.offset.iter().zip(&self.scale))
            .map(|(v, (o, s))| (v - o) / s)
            .collect()
    }
}

/// Trained constrained dynamics of the primary factors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorDynamics {
    pub drift_net: Mlp,
    pub diff_net: Mlp,
    pub constraints: FactorConstraintSystem,
    /// Boundary damping length.
    pub eps_b: f64,
    /// Joint (ln S, xi) diffusion variant flag.
    pub joint: bool,
    /// Input standardization for both networks.
    pub standardizer: Standardizer,
}

impl FactorDynamics {
    pub fn dim(&self) -> usize {
        self.constraints.dim()
    }

    /// Raw network outputs mapped to (mu_raw, factor diffusion rows).
    pub fn raw_coefficients(&self, xi: &[f64]) -> Coefficients {
        let z = self.standardizer.apply(xi);
        let mu = self.drift_net.forward(&z);
        let tri = self.diff_net.forward(&z);
        let l = lower_triangular_from_raw(tri.as_slice(), self.dim(), self.joint);
        (mu, l)
    }

    /// Transformed (boundary-safe) drift and diffusion at `xi`.
    pub fn coefficients(&self, xi: &[f64]) -> Result<Coefficients> {
        let (mu, l) = self.raw_coefficients(xi);
        transform_outputs(&self.constraints, self.eps_b, xi, &mu, &l)
    }
}

/// Index dynamics: constant drift per underlying plus a shared volatility
/// network with a positive (exponential) output map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexDynamics {
    pub vol_net: Mlp,
    /// Annualized constant drift of ln S per underlying label.
    pub drifts: BTreeMap<String, f64>,
    /// Input standardization for the volatility network.
    pub standardizer: Standardizer,
}

impl IndexDynamics {
    /// Strictly positive index volatility at a factor state.
    pub fn gamma(&self, xi: &[f64]) -> f64 {
        self.vol_net.forward(&self.standardizer.apply(xi))[0].exp()
    }

    pub fn drift(&self, label: &str) -> Result<f64> {
        self.drifts
            .get(label)
            .copied()
            .ok_or_else(|| Error::Estimation(format!("no drift estimated for label {label}")))
    }
}

/// Unbiased constant-drift estimate of ln S: telescoped mean log return per
/// year.
pub fn estimate_index_drift(spots: &[f64], dt: f64) -> Result<f64> {
    if spots.len() < 2 {
        return Err(Error::domain(
            "spots",
            format!("need at least 2 prices, got {}", spots.len()),
        ));
    }
    if let Some(bad) = spots.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::domain(
            "spots",
            format!("prices must be positive, got {bad}"),
        ));
    }
    let horizon = (spots.len() - 1) as f64 * dt;
    Ok((spots[spots.len() - 1] / spots[0]).ln() / horizon)
}

/// Ornstein–Uhlenbeck parameters of one secondary factor.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OuParams {
    /// Mean-reversion speed (1/year).
    pub kappa: f64,
    pub theta: f64,
    /// Volatility per sqrt(year).
    pub sigma: f64,
}

impl OuParams {
    /// Exact transition over `dt`: mean and standard deviation.
    pub fn transition(&self, x: f64, dt: f64) -> (f64, f64) {
        let decay = (-self.kappa * dt).exp();
        let mean = self.theta + (x - self.theta) * decay;
        let var_factor = if self.kappa.abs() < 1e-12 {
            dt
        } else {
            -(-2.0 * self.kappa * dt).exp_m1() / (2.0 * self.kappa)
        };
        (mean, self.sigma * var_factor.sqrt())
    }
}

/// OU fit with a warning for non-mean-reverting samples.
#[derive(Debug, Clone)]
pub struct OuFit {
    pub params: OuParams,
    pub warning: Option<String>,
}

/// Exact AR(1) maximum likelihood, mapped to OU parameters through the
/// Euler discretization `a = 1 - kappa dt`, `b = kappa theta dt`,
/// `s^2 = sigma^2 dt`.
pub fn fit_ou(series: &[f64], dt: f64) -> Result<OuFit> {
    let n = series.len();
    if n < 100 {
        return Err(Error::Estimation(format!(
            "need at least 100 points for an OU fit, got {n}"
        )));
    }
    let x = &series[..n - 1];
    let y = &series[1..];
    let mean_x = x.iter().sum::<f64>() / x.len() as f64;
    let mean_y = y.iter().sum::<f64>() / y.len() as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mean_x) * (xi - mean_x);
        sxy += (xi - mean_x) * (yi - mean_y);
    }
    let (a, b): (f64, f64);
    if sxx < 1e-300 {
        // Constant series: no dynamics, the level is the mean.
        a = 0.0;
        b = mean_x;
    } else {
        a = sxy / sxx;
        b = mean_y - a * mean_x;
    }
    let mut s2 = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let e = yi - a * xi - b;
        s2 += e * e;
    }
    s2 /= x.len() as f64;
    let sigma = (s2 / dt).sqrt();
    if a >= 1.0 {
        let theta = series.iter().sum::<f64>() / n as f64;
        return Ok(OuFit {
            params: OuParams {
                kappa: 1e-6,
                theta,
                sigma,
            },
            warning: Some(format!(
                "AR(1) coefficient {a:.6} >= 1: series is not mean-reverting; kappa floored"
            )),
        });
    }
    Ok(OuFit {
        params: OuParams {
            kappa: (1.0 - a) / dt,
            theta: b / (1.0 - a),
            sigma,
        },
        warning: None,
    })
}

/// Joint standardized residual rows `(Z_S, Z_xi)` of the trained models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualBank {
    /// Rows are (Z_S, Z_xi_1..d); one per usable transition.
    pub rows: DMatrix<f64>,
    /// Underlying label per row.
    pub labels: Vec<String>,
}

impl ResidualBank {
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn width(&self) -> usize {
        self.rows.ncols()
    }
}

/// Inputs for residual extraction on one underlying label.
pub struct LabelSeries<'a> {
    pub label: &'a str,
    pub log_spots: Vec<f64>,
    /// L x d factor series for this label.
    pub factors: DMatrix<f64>,
    /// Dates to exclude (decoded outside the polytope).
    pub flagged: Vec<bool>,
}

/// Historical residuals `Z_xi = sigma(xi)^{-1} (dxi - mu dt)` and
/// `Z_S = gamma^{-1} (dlnS - r dt)`, stored jointly per date.
pub fn residuals(
    factor: &FactorDynamics,
    index: &IndexDynamics,
    series: &[LabelSeries],
    dt: f64,
) -> Result<ResidualBank> {
    let d = factor.dim();
    let mut rows: Vec<f64> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for s in series {
        let l = s.factors.nrows();
        if s.log_spots.len() != l || s.flagged.len() != l {
            return Err(Error::Residual(format!(
                "series length mismatch for label {}",
                s.label
            )));
        }
        let r_hat = index.drift(s.label)?;
        for t in 0..l.saturating_sub(1) {
            if s.flagged[t] || s.flagged[t + 1] {
                continue;
            }
            let xi: Vec<f64> = (0..d).map(|k| s.factors[(t, k)]).collect();
            if factor
                .constraints
                .facet_distances(&xi)
                .iter()
                .any(|v| *v <= 0.0)
            {
                continue;
            }
            let (mu, sigma) = factor.coefficients(&xi)?;
            let dxi = DVector::from_iterator(d, (0..d).map(|k| s.factors[(t + 1, k)] - s.factors[(t, k)]));
            let e = dxi - &mu * dt;
            let z_xi = if factor.joint {
                // Factor rows span (Z_S, Z_xi); solve jointly below.
                let gamma = index.gamma(&xi);
                let dx = s.log_spots[t + 1] - s.log_spots[t] - r_hat * dt;
                let mut full = DMatrix::zeros(d + 1, d + 1);
                full[(0, 0)] = gamma;
                for i in 0..d {
                    for j in 0..=d {
                        full[(i + 1, j)] = sigma[(i, j)];
                    }
                }
                let mut rhs = DVector::zeros(d + 1);
                rhs[0] = dx;
                for i in 0..d {
                    rhs[i + 1] = e[i];
                }
                let z = full.lu().solve(&rhs).ok_or_else(|| {
                    Error::Residual(format!("singular joint diffusion at step {t}"))
                })?;
                rows.extend(z.iter());
                labels.push(s.label.to_string());
                continue;
            } else {
                sigma
                    .clone()
                    .lu()
                    .solve(&e)
                    .ok_or_else(|| Error::Residual(format!("singular diffusion at step {t}")))?
            };
            let gamma = index.gamma(&xi);
            let z_s = (s.log_spots[t + 1] - s.log_spots[t] - r_hat * dt) / gamma;
            rows.push(z_s);
            rows.extend(z_xi.iter());
            labels.push(s.label.to_string());
        }
    }
    if labels.is_empty() {
        return Err(Error::Residual("no usable transitions for residuals".into()));
    }
    let bank = ResidualBank {
        rows: DMatrix::from_row_slice(labels.len(), d + 1, &rows),
        labels,
    };
    Ok(bank)
}

/// Everything the scenario engine needs, bundled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicsModel {
    pub version: u32,
    pub factor: FactorDynamics,
    pub index: IndexDynamics,
    /// OU parameters per secondary factor.
    pub secondary: Vec<OuParams>,
    pub residual_bank: ResidualBank,
    /// Hash of the constraint system the nets were trained against.
    pub constraint_hash: String,
    pub dt: f64,
}

impl DynamicsModel {
    pub const VERSION: u32 = 1;

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string(self)
            .map_err(|e| Error::Config(format!("checkpoint serialization failed: {e}")))?;
        crate::market_data::io_atomic_write(path, &json)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: path.display().to_string(),
            message: format!("checkpoint deserialization failed: {e}"),
        })?;
        if model.version != Self::VERSION {
            return Err(Error::Config(format!(
                "checkpoint version {} unsupported (expected {})",
                model.version,
                Self::VERSION
            )));
        }
        Ok(model)
    }
}

/// Content hash of a factor constraint system, stored in checkpoints.
pub fn constraint_hash(c: &FactorConstraintSystem) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for v in c.a_proj.iter() {
        h.update(v.to_le_bytes());
    }
    for v in c.b.iter() {
        h.update(v.to_le_bytes());
    }
    crate::market_data::hex_string(&h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn half_line() -> FactorConstraintSystem {
        // 1-D polytope x >= 0.
        FactorConstraintSystem {
            a_proj: DMatrix::from_row_slice(1, 1, &[1.0]),
            b: DVector::from_vec(vec![0.0]),
            redundancy_removed: true,
        }
    }

    #[test]
    fn transform_identity_far_from_boundary() {
        let c = half_line();
        let mu = DVector::from_vec(vec![-1.0]);
        let sig = DMatrix::from_row_slice(1, 1, &[1.0]);
        let (m, s) = transform_outputs(&c, 0.1, &[5.0], &mu, &sig).unwrap();
        assert_abs_diff_eq!(m[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[(0, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn transform_damps_sigma_near_facet() {
        let c = half_line();
        let mu = DVector::from_vec(vec![0.0]);
        let sig = DMatrix::from_row_slice(1, 1, &[1.0]);
        for &x in &[0.05, 0.01, 1e-4, 1e-8] {
            let (_, s) = transform_outputs(&c, 0.1, &[x], &mu, &sig).unwrap();
            assert_abs_diff_eq!(s[(0, 0)], x / 0.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn transform_enforces_nonattainability() {
        // eps_b = 0.1, x = eps_b/2, raw mu = -1, raw sigma = 1.
        let c = half_line();
        let mu = DVector::from_vec(vec![-1.0]);
        let sig = DMatrix::from_row_slice(1, 1, &[1.0]);
        let x = 0.05;
        let (m, s) = transform_outputs(&c, 0.1, &[x], &mu, &sig).unwrap();
        let lhs = 2.0 * m[0] * x;
        let rhs = s[(0, 0)] * s[(0, 0)];
        assert!(lhs >= rhs - 1e-12, "2 mu d = {lhs} < sigma^2 = {rhs}");
        assert_abs_diff_eq!(m[0], rhs / (2.0 * x), epsilon = 1e-12);
    }

    #[test]
    fn transform_rejects_outside_states() {
        let c = half_line();
        let mu = DVector::zeros(1);
        let sig = DMatrix::identity(1, 1);
        assert!(matches!(
            transform_outputs(&c, 0.1, &[-0.01], &mu, &sig),
            Err(Error::Domain { field: "xi", .. })
        ));
    }

    #[test]
    fn index_drift_examples() {
        let s = [100.0, 103.0, 110.0];
        let dt = 0.5;
        assert_abs_diff_eq!(
            estimate_index_drift(&s, dt).unwrap(),
            (110.0f64 / 100.0).ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            estimate_index_drift(&[100.0, 110.0], 1.0).unwrap(),
            0.095310,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            estimate_index_drift(&[7.0; 12], 1.0 / 365.0).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert!(estimate_index_drift(&[1.0], 1.0).is_err());
        assert!(estimate_index_drift(&[1.0, -2.0], 1.0).is_err());
    }

    #[test]
    fn ou_fit_matches_regression_oracle() {
        // AR(1) closed-form MLE must equal the fit exactly; parameters of a
        // simulated path are recovered within 10%.
        let dt = 1.0 / 365.0;
        let truth = OuParams {
            kappa: 5.0,
            theta: 0.0,
            sigma: 0.1,
        };
        let mut rng = crate::rng::namespaced_rng(6, crate::rng::StreamKind::Test, 0);
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut x = 0.05;
        let mut series = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            series.push(x);
            let z: f64 = rng.sample(StandardNormal);
            x += truth.kappa * (truth.theta - x) * dt + truth.sigma * dt.sqrt() * z;
        }
        let fit = fit_ou(&series, dt).unwrap();
        assert!(fit.warning.is_none());
        assert!(
            (fit.params.kappa - truth.kappa).abs() / truth.kappa < 0.10,
            "kappa {}",
            fit.params.kappa
        );
        assert!(fit.params.theta.abs() < 0.02, "theta {}", fit.params.theta);
        assert!((fit.params.sigma - truth.sigma).abs() / truth.sigma < 0.10);

        // Independent OLS oracle for the AR(1) coefficients.
        let x0 = &series[..series.len() - 1];
        let y0 = &series[1..];
        let mx = x0.iter().sum::<f64>() / x0.len() as f64;
        let my = y0.iter().sum::<f64>() / y0.len() as f64;
        let sxx: f64 = x0.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxy: f64 = x0.iter().zip(y0).map(|(a, b)| (a - mx) * (b - my)).sum();
        let a = sxy / sxx;
        assert_abs_diff_eq!(fit.params.kappa, (1.0 - a) / dt, epsilon = 1e-9);
    }

    #[test]
    fn ou_fit_constant_series() {
        let fit = fit_ou(&vec![0.7; 200], 0.01).unwrap();
        assert_abs_diff_eq!(fit.params.theta, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.params.sigma, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ou_transition_limits() {
        let p = OuParams {
            kappa: 2.0,
            theta: 1.0,
            sigma: 0.5,
        };
        let (mean, sd) = p.transition(0.0, 1e9);
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sd, 0.25, epsilon = 1e-9);
        // kappa -> 0 limit: Brownian scaling.
        let q = OuParams {
            kappa: 1e-14,
            theta: 0.0,
            sigma: 0.3,
        };
        let (_, sd0) = q.transition(0.2, 0.5);
        assert_abs_diff_eq!(sd0, 0.3 * 0.5f64.sqrt(), epsilon = 1e-10);
    }
}
