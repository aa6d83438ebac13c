//! Daily Heston calibration by damped least squares.

use super::{heston_price, HestonParams};
use crate::error::{Error, Result};
use crate::market_data::LiquidLattice;

/// Calibration output: fitted parameters, the (vega-weighted) objective
/// trace, and the mean absolute percentage error of the fit.
#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub params: HestonParams,
    /// Objective value after each accepted iteration (never increasing).
    pub objective_trace: Vec<f64>,
    pub mape: f64,
}

// Internal parametrization: log for the positive parameters, identity for
// eta. Order: [ln nu0, ln theta, ln kappa, eta, ln lambda].
fn pack(p: &HestonParams) -> [f64; 5] {
    [p.nu0.ln(), p.theta.ln(), p.kappa.ln(), p.eta, p.lambda.ln()]
}

fn unpack(x: &[f64; 5], s0: f64) -> HestonParams {
    HestonParams {
        s0,
        nu0: x[0].exp(),
        theta: x[1].exp(),
        kappa: x[2].exp(),
        eta: x[3],
        lambda: x[4].exp(),
    }
}

fn residuals(
    x: &[f64; 5],
    s0: f64,
    row: &[f64],
    lattice: &LiquidLattice,
    weights: &[f64],
) -> Result<Vec<f64>> {
    let p = unpack(x, s0);
    let mut r = Vec::with_capacity(row.len());
    for (j, node) in lattice.nodes().iter().enumerate() {
        let model = heston_price(&p, node.tau, node.m)?;
        r.push(weights[j].sqrt() * (model - row[j]));
    }
    Ok(r)
}

fn sse(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Calibrate Heston parameters to one surface row by minimizing the
/// weighted squared price error (weights are reciprocal vegas).
///
/// Levenberg–Marquardt with a finite-difference Jacobian on log-transformed
/// positive parameters; steps are only ever accepted when they improve the
/// objective. Returns the best parameters found inside a calibration error
/// when the optimizer stalls above `fail_tol`.
pub fn calibrate(
    row: &[f64],
    lattice: &LiquidLattice,
    weights: &[f64],
    init: &HestonParams,
) -> Result<CalibrationResult> {
    if row.len() != lattice.len() || weights.len() != lattice.len() {
        return Err(Error::Calibration(format!(
            "row/weights length {} / {} vs {} lattice nodes",
            row.len(),
            weights.len(),
            lattice.len()
        )));
    }
    init.validate()?;
    let s0 = init.s0;
    let mut x = pack(init);
    let mut r = residuals(&x, s0, row, lattice, weights)?;
    let mut obj = sse(&r);
    let mut trace = vec![obj];
    let mut damping = 1e-3;
    let n = 5usize;

    for _outer in 0..60 {
        if obj < 1e-16 {
            break;
        }
        // Forward-difference Jacobian.
        let mut jac = vec![vec![0.0; n]; r.len()];
        for k in 0..n {
            let h = 1e-6 * (1.0 + x[k].abs());
            let mut xs = x;
            xs[k] += h;
            let rs = residuals(&xs, s0, row, lattice, weights)?;
            for (i, (a, b)) in rs.iter().zip(&r).enumerate() {
                jac[i][k] = (a - b) / h;
            }
        }
        // Normal equations JtJ + damping*diag(JtJ).
        let mut jtj = [[0.0f64; 5]; 5];
        let mut jtr = [0.0f64; 5];
        for (i, ri) in r.iter().enumerate() {
            for a in 0..n {
                jtr[a] += jac[i][a] * ri;
                for b in 0..n {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        let mut improved = false;
        for _inner in 0..12 {
            let mut lhs = jtj;
            for (a, row_l) in lhs.iter_mut().enumerate() {
                row_l[a] += damping * jtj[a][a].max(1e-12);
            }
            let Some(step) = solve5(&lhs, &jtr) else {
                damping *= 10.0;
                continue;
            };
            let mut xn = x;
            for k in 0..n {
                xn[k] -= step[k];
            }
            // Keep eta bounded and the log-params sane.
            for (k, v) in xn.iter_mut().enumerate() {
                if k == 3 {
                    *v = v.clamp(-5.0, 5.0);
                } else {
                    *v = v.clamp(-20.0, 5.0);
                }
            }
            match residuals(&xn, s0, row, lattice, weights) {
                Ok(rn) => {
                    let on = sse(&rn);
                    if on < obj {
                        x = xn;
                        r = rn;
                        obj = on;
                        trace.push(obj);
                        damping = (damping / 3.0).max(1e-12);
                        improved = true;
                        break;
                    }
                    damping *= 10.0;
                }
                Err(_) => damping *= 10.0,
            }
            if damping > 1e12 {
                break;
            }
        }
        if !improved {
            break;
        }
    }

    let params = unpack(&x, s0);
    let mape = lattice
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, node)| {
            let model = heston_price(&params, node.tau, node.m).unwrap_or(f64::NAN);
            ((model - row[j]) / row[j]).abs()
        })
        .sum::<f64>()
        / row.len() as f64;
    Ok(CalibrationResult {
        params,
        objective_trace: trace,
        mape,
    })
}

/// Solve a 5x5 linear system by Gaussian elimination with partial pivoting.
fn solve5(a: &[[f64; 5]; 5], b: &[f64; 5]) -> Option<[f64; 5]> {
    let mut m = *a;
    let mut v = *b;
    for col in 0..5 {
        let mut piv = col;
        for row in col + 1..5 {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        v.swap(col, piv);
        for row in col + 1..5 {
            let f = m[row][col] / m[col][col];
            for k in col..5 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 5];
    for col in (0..5).rev() {
        let mut s = v[col];
        for k in col + 1..5 {
            s -= m[col][k] * x[k];
        }
        x[col] = s / m[col][col];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::black_scholes as bs;

    fn small_lattice() -> LiquidLattice {
        use crate::market_data::{LatticeNode, DT_DAY};
        let mut nodes = Vec::new();
        for &d in &[30u32, 91, 182, 365] {
            let tau = f64::from(d) * DT_DAY;
            for i in 0..5 {
                let m = -0.1 + 0.05 * i as f64;
                nodes.push(LatticeNode {
                    tau,
                    m,
                    delta_label: 0.3 + 0.1 * i as f64,
                });
            }
        }
        LiquidLattice::new(nodes).unwrap()
    }

    #[test]
    fn round_trip_recovers_surface() {
        let lattice = small_lattice();
        let truth = HestonParams::from_classic(100.0, 0.05, 0.06, 2.0, 0.5, -0.5);
        let row: Vec<f64> = lattice
            .nodes()
            .iter()
            .map(|n| heston_price(&truth, n.tau, n.m).unwrap())
            .collect();
        let weights: Vec<f64> = lattice
            .nodes()
            .iter()
            .enumerate()
            .map(|(j, n)| {
                let iv = bs::implied_vol(row[j], n.tau, n.m, 1e-10).unwrap();
                1.0 / bs::vega(iv, n.tau, n.m)
            })
            .collect();
        let init = HestonParams {
            s0: 100.0,
            nu0: 0.04,
            theta: 0.04,
            kappa: 1.0,
            eta: 0.1,
            lambda: 0.3,
        };
        let fit = calibrate(&row, &lattice, &weights, &init).unwrap();
        assert!(
            *fit.objective_trace.last().unwrap() <= 1e-8,
            "objective {:?}",
            fit.objective_trace.last()
        );
        // Objective trace must never increase.
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-18);
        }
    }

    #[test]
    fn flat_surface_fits_degenerate_parameters() {
        let lattice = small_lattice();
        let row: Vec<f64> = lattice
            .nodes()
            .iter()
            .map(|n| bs::price(0.2, n.tau, n.m))
            .collect();
        let weights = vec![1.0; lattice.len()];
        let init = HestonParams {
            s0: 100.0,
            nu0: 0.03,
            theta: 0.05,
            kappa: 1.0,
            eta: 0.1,
            lambda: 0.3,
        };
        let fit = calibrate(&row, &lattice, &weights, &init).unwrap();
        assert!((fit.params.nu0 - 0.04).abs() < 5e-3, "nu0 = {}", fit.params.nu0);
        assert!((fit.params.theta - 0.04).abs() < 5e-3, "theta = {}", fit.params.theta);
        assert!(fit.params.vol_of_vol() < 0.05, "vol of vol = {}", fit.params.vol_of_vol());
        assert!(fit.mape < 1e-3);
    }
}
