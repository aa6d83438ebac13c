//! GARCH(1,1) quasi-maximum-likelihood volatility benchmark.

use crate::error::{Error, Result};

/// Fitted GARCH(1,1) model `h_t = omega + alpha e_{t-1}^2 + beta h_{t-1}`.
#[derive(Debug, Clone)]
pub struct GarchFit {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Annualized conditional volatility path, one value per return.
    pub conditional_vol: Vec<f64>,
    pub log_likelihood: f64,
}

impl GarchFit {
    /// Unconditional (long-run) variance per step.
    pub fn long_run_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }
}

// Parameter transform keeping omega > 0, alpha, beta > 0, alpha + beta < 1.
fn unpack(u: &[f64; 3]) -> (f64, f64, f64) {
    let omega = u[0].exp();
    let ea = u[1].exp();
    let eb = u[2].exp();
    let denom = 1.0 + ea + eb;
    (omega, ea / denom, eb / denom)
}

fn neg_log_likelihood(eps: &[f64], h0: f64, omega: f64, alpha: f64, beta: f64) -> f64 {
    let mut h = h0;
    let mut nll = 0.0;
    for (t, e) in eps.iter().enumerate() {
        if t > 0 {
            h = omega + alpha * eps[t - 1] * eps[t - 1] + beta * h;
        }
        if !(h > 0.0) || !h.is_finite() {
            return f64::INFINITY;
        }
        nll += 0.5 * (h.ln() + e * e / h);
    }
    nll
}

/// Fit a GARCH(1,1) by Gaussian quasi-MLE with the stationarity constraint
/// built into the parametrization. Returns the annualized conditional vol
/// path (per-step variance divided by `dt`).
pub fn fit_garch11(returns: &[f64], dt: f64) -> Result<GarchFit> {
    let n = returns.len();
    if n < 250 {
        return Err(Error::Estimation(format!(
            "need at least 250 returns for a GARCH fit, got {n}"
        )));
    }
    let mean = returns.iter().sum::<f64>() / n as f64;
    let eps: Vec<f64> = returns.iter().map(|r| r - mean).collect();
    let var = eps.iter().map(|e| e * e).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return Err(Error::Estimation(
            "zero-variance return series cannot be fitted".into(),
        ));
    }
    let h0 = var;
    let objective = |u: &[f64; 3]| {
        let (omega, alpha, beta) = unpack(u);
        neg_log_likelihood(&eps, h0, omega, alpha, beta)
    };

    // Nelder-Mead from the standard (0.08, 0.9) starting point.
    let start = [
        (var * (1.0 - 0.08 - 0.9)).max(1e-300).ln(),
        (0.08f64 / 0.02).ln(),
        (0.9f64 / 0.02).ln(),
    ];
    let best = nelder_mead(objective, start, 800, 1e-10);
    let (omega, alpha, beta) = unpack(&best.0);

    let mut h = h0;
    let mut vols = Vec::with_capacity(n);
    for t in 0..n {
        if t > 0 {
            h = omega + alpha * eps[t - 1] * eps[t - 1] + beta * h;
        }
        vols.push((h / dt).sqrt());
    }
    Ok(GarchFit {
        omega,
        alpha,
        beta,
        conditional_vol: vols,
        log_likelihood: -best.1,
    })
}

/// Minimal deterministic Nelder–Mead on R^3.
fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(
    f: F,
    start: [f64; 3],
    max_iter: usize,
    tol: f64,
) -> ([f64; 3], f64) {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;
    let mut simplex: Vec<[f64; 3]> = vec![start];
    for i in 0..3 {
        let mut p = start;
        p[i] += if p[i].abs() > 1.0 { 0.1 * p[i].abs() } else { 0.25 };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let simplex_s: Vec<[f64; 3]> = order.iter().map(|&i| simplex[i]).collect();
        let values_s: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = simplex_s;
        values = values_s;
        if (values[3] - values[0]).abs() < tol * (1.0 + values[0].abs()) {
            break;
        }
        let mut centroid = [0.0; 3];
        for p in &simplex[..3] {
            for k in 0..3 {
                centroid[k] += p[k] / 3.0;
            }
        }
        let worst = simplex[3];
        let mut reflected = [0.0; 3];
        for k in 0..3 {
            reflected[k] = centroid[k] + ALPHA * (centroid[k] - worst[k]);
        }
        let fr = f(&reflected);
        if fr < values[0] {
            let mut expanded = [0.0; 3];
            for k in 0..3 {
                expanded[k] = centroid[k] + GAMMA * (reflected[k] - centroid[k]);
            }
            let fe = f(&expanded);
            if fe < fr {
                simplex[3] = expanded;
                values[3] = fe;
            } else {
                simplex[3] = reflected;
                values[3] = fr;
            }
        } else if fr < values[2] {
            simplex[3] = reflected;
            values[3] = fr;
        } else {
            let mut contracted = [0.0; 3];
            for k in 0..3 {
                contracted[k] = centroid[k] + RHO * (worst[k] - centroid[k]);
            }
            let fc = f(&contracted);
            if fc < values[3] {
                simplex[3] = contracted;
                values[3] = fc;
            } else {
                for i in 1..4 {
                    for k in 0..3 {
                        simplex[i][k] = simplex[0][k] + SIGMA * (simplex[i][k] - simplex[0][k]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..4 {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best], values[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{namespaced_rng, StreamKind};
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn iid_gaussian_returns_give_small_arch_terms() {
        let mut rng = namespaced_rng(21, StreamKind::Test, 0);
        let daily = 0.01;
        let returns: Vec<f64> = (0..4000)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                daily * z
            })
            .collect();
        let dt = 1.0 / 365.0;
        let fit = fit_garch11(&returns, dt).unwrap();
        assert!(fit.alpha + fit.beta < 1.0);
        // No ARCH effect in the data.
        assert!(fit.alpha < 0.05, "alpha {}", fit.alpha);
        // The fitted conditional vol tracks the sample vol; with alpha near
        // zero the (omega, beta) pair is only identified through this level.
        let mean_var = fit
            .conditional_vol
            .iter()
            .map(|v| v * v * dt)
            .sum::<f64>()
            / fit.conditional_vol.len() as f64;
        let lr = mean_var.sqrt();
        assert!(
            (lr - daily).abs() / daily < 0.10,
            "mean conditional vol {lr} vs {daily}"
        );
    }

    #[test]
    fn simulated_garch_recovers_parameters() {
        let (omega, alpha, beta) = (1e-6, 0.08, 0.90);
        let mut rng = namespaced_rng(22, StreamKind::Test, 0);
        let mut h = omega / (1.0 - alpha - beta);
        let mut returns = Vec::with_capacity(10_000);
        let mut prev: f64 = 0.0;
        for t in 0..10_000 {
            if t > 0 {
                h = omega + alpha * prev * prev + beta * h;
            }
            let z: f64 = rng.sample(StandardNormal);
            prev = h.sqrt() * z;
            returns.push(prev);
        }
        let fit = fit_garch11(&returns, 1.0 / 365.0).unwrap();
        assert!(
            (fit.alpha - alpha).abs() / alpha < 0.15,
            "alpha {}",
            fit.alpha
        );
        assert!((fit.beta - beta).abs() / beta < 0.15, "beta {}", fit.beta);
        assert!(
            (fit.omega - omega).abs() / omega < 0.6,
            "omega {}",
            fit.omega
        );
        assert!(fit.alpha + fit.beta < 1.0);
    }

    #[test]
    fn zero_variance_is_an_error() {
        assert!(matches!(
            fit_garch11(&vec![0.0; 300], 1.0 / 365.0),
            Err(Error::Estimation(_))
        ));
    }
}
