//! Maximum-likelihood training of the constrained neural SDEs.
//!
//! The Gaussian transition likelihood of the Euler discretization is
//! minimized with adaptive-moment gradient steps over shuffled minibatches.
//! Halfway through the epoch budget the smallest half of each network's
//! weights is pruned to zero and training continues on the surviving
//! parameters. The first 90% of transitions (chronological) train, the
//! last 10% are validation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{AdamState, Mlp, MlpGrads};
use super::{
    lower_triangular_from_raw, softplus_deriv, transform_backward, transform_with_tape,
    FactorDynamics, IndexDynamics, LabelSeries, Standardizer,
};
use crate::error::{Error, Result};
use crate::rng::{namespaced_rng, StreamKind};
use crate::static_arbitrage::FactorConstraintSystem;

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Epoch after which one-shot pruning runs; defaults to half the budget.
    pub prune_epoch: Option<usize>,
    pub sparsity: f64,
    pub validation_fraction: f64,
    /// Boundary damping length as a fraction of the polytope inradius.
    pub eps_b_fraction: f64,
    pub hidden_factor: usize,
    pub hidden_index: usize,
    /// Train the joint (ln S, xi) diffusion variant.
    pub joint: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 256,
            learning_rate: 1e-3,
            seed: 0,
            prune_epoch: None,
            sparsity: 0.5,
            validation_fraction: 0.1,
            eps_b_fraction: 0.05,
            hidden_factor: 256,
            hidden_index: 128,
            joint: false,
        }
    }
}

/// Loss curves and pruning bookkeeping from one training run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub pruned_weights: usize,
}

struct Transition {
    xi: Vec<f64>,
    dxi: DVector<f64>,
    /// ln S increment minus the label drift times dt (joint mode).
    dx: f64,
}

fn collect_transitions(
    series: &[LabelSeries],
    constraints: &FactorConstraintSystem,
    drifts: Option<&std::collections::BTreeMap<String, f64>>,
    dt: f64,
) -> Result<Vec<Transition>> {
    let d = constraints.dim();
    let mut out = Vec::new();
    for s in series {
        let l = s.factors.nrows();
        let r_hat = match drifts {
            Some(map) => *map.get(s.label).ok_or_else(|| {
                Error::Training(format!("no drift for label {} in joint training", s.label))
            })?,
            None => 0.0,
        };
        for t in 0..l.saturating_sub(1) {
            if s.flagged[t] || s.flagged[t + 1] {
                continue;
            }
            let xi: Vec<f64> = (0..d).map(|k| s.factors[(t, k)]).collect();
            if constraints.facet_distances(&xi).iter().any(|v| *v <= 1e-12) {
                continue;
            }
            let dxi =
                DVector::from_iterator(d, (0..d).map(|k| s.factors[(t + 1, k)] - s.factors[(t, k)]));
            let dx = if s.log_spots.is_empty() {
                0.0
            } else {
                s.log_spots[t + 1] - s.log_spots[t] - r_hat * dt
            };
            out.push(Transition { xi, dxi, dx });
        }
    }
    if out.len() < 16 {
        return Err(Error::Training(format!(
            "only {} usable transitions; too few to train",
            out.len()
        )));
    }
    Ok(out)
}

/// Sample moments used to warm-start the output biases, so the optimizer
/// starts at the constant-coefficient fit rather than at an arbitrary
/// volatility scale.
fn warm_start(transitions: &[Transition], d: usize, dt: f64) -> (DVector<f64>, DMatrix<f64>) {
    let n = transitions.len() as f64;
    let mut mean = DVector::zeros(d);
    for tr in transitions {
        mean += &tr.dxi;
    }
    mean /= n;
    let mut cov = DMatrix::zeros(d, d);
    for tr in transitions {
        let e = &tr.dxi - &mean;
        cov.ger(1.0 / n, &e, &e, 1.0);
    }
    let drift = mean / dt;
    let chol = (cov / dt)
        .cholesky()
        .map(|c| c.l())
        .unwrap_or_else(|| DMatrix::identity(d, d) * 1e-3);
    (drift, chol)
}

fn fit_standardizer(transitions: &[Transition]) -> Standardizer {
    let rows: Vec<Vec<f64>> = transitions.iter().map(|t| t.xi.clone()).collect();
    Standardizer::fit(&rows)
}

/// Shrink the final affine layer so warm-started output biases dominate
/// the initial function value.
fn calm_final_layer(net: &mut Mlp) {
    let last = net.weights.len() - 1;
    net.weights[last] *= 0.1;
}

fn inv_softplus(y: f64) -> f64 {
    let y = y.max(1e-12);
    if y > 30.0 {
        y
    } else {
        (y.exp() - 1.0).max(1e-300).ln()
    }
}

/// Per-sample negative log likelihood and gradients through the transform.
/// Returns the NLL value; accumulates parameter gradients when `grads` is
/// provided.
#[allow(clippy::too_many_arguments)]
fn nll_sample(
    drift_net: &Mlp,
    diff_net: &Mlp,
    vol_net: Option<&Mlp>,
    standardizer: &Standardizer,
    constraints: &FactorConstraintSystem,
    eps_b: f64,
    joint: bool,
    tr: &Transition,
    dt: f64,
    grads: Option<(&mut MlpGrads, &mut MlpGrads, Option<&mut MlpGrads>)>,
) -> Result<f64> {
    let d = constraints.dim();
    let z_in = standardizer.apply(&tr.xi);
    let cache_mu = drift_net.forward_cached(&z_in);
    let cache_tri = diff_net.forward_cached(&z_in);
    let raw_mu = cache_mu.activations.last().unwrap().clone();
    let raw_tri = cache_tri.activations.last().unwrap().clone();
    let l_raw = lower_triangular_from_raw(raw_tri.as_slice(), d, joint);
    let (mu, sigma, tape) = transform_with_tape(constraints, eps_b, &tr.xi, &raw_mu, &l_raw)?;

    // Assemble the system dimension: plain factors or joint (ln S, xi).
    let (dim, full, e, vol_cache) = if joint {
        let vol_net = vol_net.expect("joint mode requires a vol net");
        let cache_v = vol_net.forward_cached(&z_in);
        let gamma = cache_v.activations.last().unwrap()[0].exp();
        let mut full = DMatrix::zeros(d + 1, d + 1);
        full[(0, 0)] = gamma;
        for i in 0..d {
            for j in 0..=d {
                full[(i + 1, j)] = sigma[(i, j)];
            }
        }
        let mut e = DVector::zeros(d + 1);
        e[0] = tr.dx;
        for i in 0..d {
            e[i + 1] = tr.dxi[i] - mu[i] * dt;
        }
        (d + 1, full, e, Some(cache_v))
    } else {
        (d, sigma.clone(), tr.dxi.clone() - &mu * dt, None)
    };

    let big_sigma = &full * full.transpose();
    let chol = big_sigma.clone().cholesky().ok_or_else(|| {
        Error::Training("diffusion covariance not positive definite".to_string())
    })?;
    let y = chol.solve(&e);
    let ln_det: f64 = (0..dim).map(|i| chol.l()[(i, i)].ln()).sum::<f64>() * 2.0;
    let nll = 0.5
        * (e.dot(&y) / dt
            + ln_det
            + dim as f64 * (dt.ln() + (2.0 * std::f64::consts::PI).ln()));
    if !nll.is_finite() {
        return Err(Error::Training(format!(
            "non-finite likelihood at xi = {:?}",
            tr.xi
        )));
    }

    if let Some((g_drift, g_diff, g_vol)) = grads {
        // d nll / d Sigma = (inv - y y^T / dt) / 2; d nll / d full = 2 * that * full.
        let inv = chol.inverse();
        let g_big = (inv - &y * y.transpose() / dt) * 0.5;
        let g_full = &g_big * &full * 2.0;

        // Drift gradient: -y on the factor components.
        let g_mu_t = if joint {
            DVector::from_iterator(d, (1..=d).map(|i| -y[i] * 1.0))
        } else {
            -y.clone()
        };
        // Extract the factor-block diffusion gradient.
        let g_sigma_t = if joint {
            let mut g = DMatrix::zeros(d, d + 1);
            for i in 0..d {
                for j in 0..=d {
                    g[(i, j)] = g_full[(i + 1, j)];
                }
            }
            g
        } else {
            g_full.clone()
        };
        let (g_mu_raw, g_l_raw) =
            transform_backward(constraints, &tape, &sigma, &g_mu_t, &g_sigma_t);

        drift_net.backward(&cache_mu, &g_mu_raw, g_drift);

        // Map back to the triangular output vector.
        let mut g_tri = DVector::zeros(raw_tri.len());
        let mut idx = 0usize;
        for i in 0..d {
            for j in 0..=i {
                let col = if joint { j + 1 } else { j };
                g_tri[idx] = if i == j {
                    g_l_raw[(i, col)] * softplus_deriv(raw_tri[idx])
                } else {
                    g_l_raw[(i, col)]
                };
                idx += 1;
            }
        }
        if joint {
            for i in 0..d {
                g_tri[idx] = g_l_raw[(i, 0)];
                idx += 1;
            }
        }
        diff_net.backward(&cache_tri, &g_tri, g_diff);

        if joint {
            let cache_v = vol_cache.as_ref().unwrap();
            let gamma = full[(0, 0)];
            // gamma = exp(out): d nll/d out = gamma * g_full[0,0].
            let g_out = DVector::from_vec(vec![gamma * g_full[(0, 0)]]);
            if let Some(gv) = g_vol {
                vol_net.unwrap().backward(cache_v, &g_out, gv);
            }
        }
    }
    Ok(nll)
}

fn mean_nll(
    transitions: &[Transition],
    idx: &[usize],
    drift_net: &Mlp,
    diff_net: &Mlp,
    vol_net: Option<&Mlp>,
    standardizer: &Standardizer,
    constraints: &FactorConstraintSystem,
    eps_b: f64,
    joint: bool,
    dt: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for &i in idx {
        total += nll_sample(
            drift_net,
            diff_net,
            vol_net,
            standardizer,
            constraints,
            eps_b,
            joint,
            &transitions[i],
            dt,
            None,
        )?;
    }
    Ok(total / idx.len() as f64)
}

/// Boundary damping length from the polytope inradius.
fn damping_length(constraints: &FactorConstraintSystem, fraction: f64) -> Result<f64> {
    let (_, inradius) = constraints.chebyshev_center()?;
    Ok((inradius * fraction).max(1e-12))
}

/// Train the constrained factor SDE on decoded series.
pub fn train_factor_sde(
    series: &[LabelSeries],
    constraints: &FactorConstraintSystem,
    dt: f64,
    config: &TrainConfig,
) -> Result<(FactorDynamics, TrainReport)> {
    let d = constraints.dim();
    let transitions = collect_transitions(series, constraints, None, dt)?;
    let eps_b = damping_length(constraints, config.eps_b_fraction)?;
    let h = config.hidden_factor;
    let tri = d * (d + 1) / 2;
    let mut rng = namespaced_rng(config.seed, StreamKind::Training, 0);
    let mut drift_net = Mlp::new(&[d, h, h, h, d], &mut rng);
    let mut diff_net = Mlp::new(&[d, h, h, h, tri], &mut rng);
    calm_final_layer(&mut drift_net);
    calm_final_layer(&mut diff_net);
    let standardizer = fit_standardizer(&transitions);

    // Warm-start the output biases at the constant-coefficient fit.
    let (drift0, chol0) = warm_start(&transitions, d, dt);
    let bias_mu = drift_net.biases.last_mut().unwrap();
    for i in 0..d {
        bias_mu[i] = drift0[i];
    }
    let bias_tri = diff_net.biases.last_mut().unwrap();
    let mut idx = 0usize;
    for i in 0..d {
        for j in 0..=i {
            bias_tri[idx] = if i == j {
                inv_softplus(chol0[(i, j)].max(1e-6))
            } else {
                chol0[(i, j)]
            };
            idx += 1;
        }
    }

    let report = run_training(
        &transitions,
        &mut drift_net,
        &mut diff_net,
        None,
        &standardizer,
        constraints,
        eps_b,
        false,
        dt,
        config,
    )?;
    Ok((
        FactorDynamics {
            drift_net,
            diff_net,
            constraints: constraints.clone(),
            eps_b,
            joint: false,
            standardizer,
        },
        report,
    ))
}

/// Train the index volatility network (shared across labels, constant
/// per-label drift).
pub fn train_index_vol(
    series: &[LabelSeries],
    drifts: &std::collections::BTreeMap<String, f64>,
    constraints: &FactorConstraintSystem,
    dt: f64,
    config: &TrainConfig,
) -> Result<(IndexDynamics, TrainReport)> {
    let d = constraints.dim();
    let transitions = collect_transitions(series, constraints, Some(drifts), dt)?;
    let h = config.hidden_index;
    let mut rng = namespaced_rng(config.seed, StreamKind::Training, 1);
    let mut vol_net = Mlp::new(&[d, h, h, h, 1], &mut rng);
    calm_final_layer(&mut vol_net);
    let standardizer = fit_standardizer(&transitions);
    // Warm start at the sample index volatility.
    let var = transitions.iter().map(|t| t.dx * t.dx).sum::<f64>() / transitions.len() as f64;
    vol_net.biases.last_mut().unwrap()[0] = (var / dt).sqrt().max(1e-8).ln();

    let mut adam = AdamState::new(&vol_net);
    let split = ((transitions.len() as f64) * (1.0 - config.validation_fraction)).ceil() as usize;
    let split = split.clamp(1, transitions.len());
    let train_idx: Vec<usize> = (0..split).collect();
    let val_idx: Vec<usize> = (split..transitions.len()).collect();
    let mut order = train_idx.clone();
    let mut rng = namespaced_rng(config.seed, StreamKind::Training, 2);
    let mut report = TrainReport::default();
    let prune_at = config.prune_epoch.unwrap_or(config.epochs / 2);
    let batches_per_epoch = order.len().div_ceil(config.batch_size).max(1);
    let total_steps = (config.epochs * batches_per_epoch) as f64;
    let mut step_no = 0usize;

    let scalar_nll = |net: &Mlp, t: &Transition| -> f64 {
        let gamma = net.forward(&standardizer.apply(&t.xi))[0].exp();
        0.5 * (t.dx * t.dx / (gamma * gamma * dt)
            + 2.0 * gamma.ln()
            + dt.ln()
            + (2.0 * std::f64::consts::PI).ln())
    };

    for epoch in 0..config.epochs {
        // Fisher-Yates shuffle.
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let progress = step_no as f64 / total_steps;
            let lr = config.learning_rate * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
            step_no += 1;
            let mut grads = vol_net.zero_grads();
            for &i in chunk {
                let t = &transitions[i];
                let cache = vol_net.forward_cached(&standardizer.apply(&t.xi));
                let out = cache.activations.last().unwrap()[0];
                let gamma = out.exp();
                let nll = 0.5
                    * (t.dx * t.dx / (gamma * gamma * dt)
                        + 2.0 * out
                        + dt.ln()
                        + (2.0 * std::f64::consts::PI).ln());
                if !nll.is_finite() {
                    return Err(Error::Training(format!(
                        "non-finite index likelihood at xi = {:?}",
                        t.xi
                    )));
                }
                epoch_loss += nll;
                let g_out = DVector::from_vec(vec![1.0 - t.dx * t.dx / (gamma * gamma * dt)]);
                let scale = 1.0 / chunk.len() as f64;
                let g_scaled = g_out * scale;
                vol_net.backward(&cache, &g_scaled, &mut grads);
            }
            adam.step(&mut vol_net, &grads, lr);
        }
        report.train_loss.push(epoch_loss / order.len() as f64);
        let val = if val_idx.is_empty() {
            f64::NAN
        } else {
            val_idx.iter().map(|&i| scalar_nll(&vol_net, &transitions[i])).sum::<f64>()
                / val_idx.len() as f64
        };
        report.val_loss.push(val);
        if epoch + 1 == prune_at {
            report.pruned_weights += vol_net.prune_to_sparsity(config.sparsity);
        }
    }
    Ok((
        IndexDynamics {
            vol_net,
            drifts: drifts.clone(),
            standardizer,
        },
        report,
    ))
}

/// Joint (ln S, xi) variant output: constrained factor dynamics with the
/// extra diffusion column, plus the index net trained in the same
/// likelihood.
pub struct JointDynamics {
    pub factor: FactorDynamics,
    pub index: IndexDynamics,
    pub report: TrainReport,
}

/// Train the joint (ln S, xi) system with a full covariance matrix.
pub fn train_joint_sde(
    series: &[LabelSeries],
    drifts: &std::collections::BTreeMap<String, f64>,
    constraints: &FactorConstraintSystem,
    dt: f64,
    config: &TrainConfig,
) -> Result<JointDynamics> {
    let d = constraints.dim();
    let transitions = collect_transitions(series, constraints, Some(drifts), dt)?;
    let eps_b = damping_length(constraints, config.eps_b_fraction)?;
    let h = config.hidden_factor;
    let tri = d * (d + 1) / 2 + d;
    let mut rng = namespaced_rng(config.seed, StreamKind::Training, 3);
    let mut drift_net = Mlp::new(&[d, h, h, h, d], &mut rng);
    let mut diff_net = Mlp::new(&[d, h, h, h, tri], &mut rng);
    let hi = config.hidden_index;
    let mut vol_net = Mlp::new(&[d, hi, hi, hi, 1], &mut rng);
    calm_final_layer(&mut drift_net);
    calm_final_layer(&mut diff_net);
    calm_final_layer(&mut vol_net);
    let standardizer = fit_standardizer(&transitions);

    let (drift0, chol0) = warm_start(&transitions, d, dt);
    let bias_mu = drift_net.biases.last_mut().unwrap();
    for i in 0..d {
        bias_mu[i] = drift0[i];
    }
    let bias_tri = diff_net.biases.last_mut().unwrap();
    let mut idx = 0usize;
    for i in 0..d {
        for j in 0..=i {
            bias_tri[idx] = if i == j {
                inv_softplus(chol0[(i, j)].max(1e-6))
            } else {
                chol0[(i, j)]
            };
            idx += 1;
        }
    }
    let var = transitions.iter().map(|t| t.dx * t.dx).sum::<f64>() / transitions.len() as f64;
    vol_net.biases.last_mut().unwrap()[0] = (var / dt).sqrt().max(1e-8).ln();

    let report = run_training(
        &transitions,
        &mut drift_net,
        &mut diff_net,
        Some(&mut vol_net),
        &standardizer,
        constraints,
        eps_b,
        true,
        dt,
        config,
    )?;
    Ok(JointDynamics {
        factor: FactorDynamics {
            drift_net,
            diff_net,
            constraints: constraints.clone(),
            eps_b,
            joint: true,
            standardizer: standardizer.clone(),
        },
        index: IndexDynamics {
            vol_net,
            drifts: drifts.clone(),
            standardizer,
        },
        report,
    })
}

/// Shared epoch loop for the factor and joint trainers.
#[allow(clippy::too_many_arguments)]
fn run_training(
    transitions: &[Transition],
    drift_net: &mut Mlp,
    diff_net: &mut Mlp,
    mut vol_net: Option<&mut Mlp>,
    standardizer: &Standardizer,
    constraints: &FactorConstraintSystem,
    eps_b: f64,
    joint: bool,
    dt: f64,
    config: &TrainConfig,
) -> Result<TrainReport> {
    let mut adam_drift = AdamState::new(drift_net);
    let mut adam_diff = AdamState::new(diff_net);
    let mut adam_vol = vol_net.as_ref().map(|v| AdamState::new(v));
    let split = ((transitions.len() as f64) * (1.0 - config.validation_fraction)).ceil() as usize;
    let split = split.clamp(1, transitions.len());
    let train_idx: Vec<usize> = (0..split).collect();
    let val_idx: Vec<usize> = (split..transitions.len()).collect();
    let mut order = train_idx;
    let mut rng = namespaced_rng(config.seed, StreamKind::Training, 4);
    let mut report = TrainReport::default();
    let prune_at = config.prune_epoch.unwrap_or(config.epochs / 2);
    let batches_per_epoch = order.len().div_ceil(config.batch_size).max(1);
    let total_steps = (config.epochs * batches_per_epoch) as f64;
    let mut step_no = 0usize;

    for epoch in 0..config.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            // Cosine-decayed step size; gradients of the drift are noisy at
            // daily frequency, so the step must shrink for the parameters
            // to settle instead of jittering around the optimum.
            let progress = step_no as f64 / total_steps;
            let lr = config.learning_rate * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
            step_no += 1;
            let mut g_drift = drift_net.zero_grads();
            let mut g_diff = diff_net.zero_grads();
            let mut g_vol = vol_net.as_ref().map(|v| v.zero_grads());
            for &i in chunk {
                let nll = nll_sample(
                    drift_net,
                    diff_net,
                    vol_net.as_deref(),
                    standardizer,
                    constraints,
                    eps_b,
                    joint,
                    &transitions[i],
                    dt,
                    Some((&mut g_drift, &mut g_diff, g_vol.as_mut())),
                )?;
                epoch_loss += nll;
            }
            let scale = 1.0 / chunk.len() as f64;
            scale_grads(&mut g_drift, scale);
            scale_grads(&mut g_diff, scale);
            adam_drift.step(drift_net, &g_drift, lr);
            adam_diff.step(diff_net, &g_diff, lr);
            if let (Some(net), Some(gv), Some(av)) =
                (vol_net.as_deref_mut(), g_vol.as_mut(), adam_vol.as_mut())
            {
                scale_grads(gv, scale);
                av.step(net, gv, lr);
            }
        }
        report.train_loss.push(epoch_loss / order.len() as f64);
        let val = if val_idx.is_empty() {
            f64::NAN
        } else {
            mean_nll(
                transitions,
                &val_idx,
                drift_net,
                diff_net,
                vol_net.as_deref(),
                standardizer,
                constraints,
                eps_b,
                joint,
                dt,
            )?
        };
        report.val_loss.push(val);
        if epoch + 1 == prune_at {
            report.pruned_weights += drift_net.prune_to_sparsity(config.sparsity);
            report.pruned_weights += diff_net.prune_to_sparsity(config.sparsity);
            if let Some(net) = vol_net.as_deref_mut() {
                report.pruned_weights += net.prune_to_sparsity(config.sparsity);
            }
        }
    }
    Ok(report)
}

fn scale_grads(g: &mut MlpGrads, s: f64) {
    for w in &mut g.weights {
        *w *= s;
    }
    for b in &mut g.biases {
        *b *= s;
    }
}

/// Analytic gradient of the mean factor NLL over a sample set, flattened
/// per network; used by the finite-difference checks.
pub(crate) fn factor_loss_and_grads(
    series: &[LabelSeries],
    constraints: &FactorConstraintSystem,
    drift_net: &Mlp,
    diff_net: &Mlp,
    eps_b: f64,
    dt: f64,
) -> Result<(f64, MlpGrads, MlpGrads)> {
    let transitions = collect_transitions(series, constraints, None, dt)?;
    let standardizer = Standardizer::identity(constraints.dim());
    let mut g_drift = drift_net.zero_grads();
    let mut g_diff = diff_net.zero_grads();
    let mut total = 0.0;
    for tr in &transitions {
        total += nll_sample(
            drift_net,
            diff_net,
            None,
            &standardizer,
            constraints,
            eps_b,
            false,
            tr,
            dt,
            Some((&mut g_drift, &mut g_diff, None)),
        )?;
    }
    let n = transitions.len() as f64;
    scale_grads(&mut g_drift, 1.0 / n);
    scale_grads(&mut g_diff, 1.0 / n);
    Ok((total / n, g_drift, g_diff))
}

pub(crate) fn factor_loss(
    series: &[LabelSeries],
    constraints: &FactorConstraintSystem,
    drift_net: &Mlp,
    diff_net: &Mlp,
    eps_b: f64,
    dt: f64,
) -> Result<f64> {
    let transitions = collect_transitions(series, constraints, None, dt)?;
    let idx: Vec<usize> = (0..transitions.len()).collect();
    let standardizer = Standardizer::identity(constraints.dim());
    mean_nll(
        &transitions,
        &idx,
        drift_net,
        diff_net,
        None,
        &standardizer,
        constraints,
        eps_b,
        false,
        dt,
    )
}
