//! Filtered historical simulation baseline on Heston risk factors.
//!
//! The comparison engine calibrates a Heston model to each day's surface,
//! tracks EWMA volatilities of the calibrated parameters, and builds risk
//! scenarios by rescaling historical parameter returns to current
//! volatility.

mod calibrate;
mod pricer;

pub use calibrate::{calibrate, CalibrationResult};
pub use pricer::{heston_price, heston_put};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Heston parameters in the rotated decomposition: the variance shock is
/// split into a component along the price shock (`eta = -sigma*rho`) and an
/// orthogonal one (`lambda = sigma*sqrt(1-rho^2)`), so positivity
/// constraints stay simple during calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    /// Spot level (not used by normalized pricing, carried as a risk factor).
    pub s0: f64,
    /// Initial variance.
    pub nu0: f64,
    /// Long-run variance.
    pub theta: f64,
    /// Mean-reversion speed (1/year).
    pub kappa: f64,
    /// Variance shock loading on the price shock; positive means negative
    /// price/vol correlation.
    pub eta: f64,
    /// Orthogonal variance shock loading, strictly positive.
    pub lambda: f64,
}

impl HestonParams {
    /// Construct from the classic `(sigma, rho)` parametrization.
    pub fn from_classic(s0: f64, nu0: f64, theta: f64, kappa: f64, sigma: f64, rho: f64) -> Self {
        Self {
            s0,
            nu0,
            theta,
            kappa,
            eta: -sigma * rho,
            lambda: sigma * (1.0 - rho * rho).sqrt(),
        }
    }

    /// Vol-of-vol `sigma = sqrt(eta^2 + lambda^2)`.
    pub fn vol_of_vol(&self) -> f64 {
        self.eta.hypot(self.lambda)
    }

    /// Price/variance correlation `rho = -eta / sigma`.
    pub fn correlation(&self) -> f64 {
        let s = self.vol_of_vol();
        if s == 0.0 {
            0.0
        } else {
            (-self.eta / s).clamp(-1.0, 1.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("s0", self.s0),
            ("nu0", self.nu0),
            ("theta", self.theta),
            ("kappa", self.kappa),
            ("lambda", self.lambda),
        ];
        for (name, v) in positives {
            if !(v > 0.0) {
                return Err(Error::Domain {
                    field: match name {
                        "s0" => "s0",
                        "nu0" => "nu0",
                        "theta" => "theta",
                        "kappa" => "kappa",
                        _ => "lambda",
                    },
                    message: format!("must be positive, got {v}"),
                });
            }
        }
        if !self.eta.is_finite() {
            return Err(Error::domain("eta", "must be finite".to_string()));
        }
        Ok(())
    }

    /// Risk-factor vector `[s0, nu0, theta, kappa, eta, lambda]`.
    pub fn to_factors(&self) -> [f64; 6] {
        [self.s0, self.nu0, self.theta, self.kappa, self.eta, self.lambda]
    }

    pub fn from_factors(f: &[f64; 6]) -> Self {
        Self {
            s0: f[0],
            nu0: f[1],
            theta: f[2],
            kappa: f[3],
            eta: f[4],
            lambda: f[5],
        }
    }
}

/// Return convention per risk factor: log returns for factors that are
/// positive by definition, absolute changes otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnConvention {
    Log,
    Absolute,
}

/// Conventions for the six Heston factors; `eta` may change sign, so it
/// uses absolute returns.
pub const FACTOR_CONVENTIONS: [ReturnConvention; 6] = [
    ReturnConvention::Log,
    ReturnConvention::Log,
    ReturnConvention::Log,
    ReturnConvention::Log,
    ReturnConvention::Absolute,
    ReturnConvention::Log,
];

/// Compute the return of a factor between two observations.
pub fn factor_return(convention: ReturnConvention, from: f64, to: f64) -> f64 {
    match convention {
        ReturnConvention::Log => (to / from).ln(),
        ReturnConvention::Absolute => to - from,
    }
}

/// Apply a return to the current factor level.
pub fn apply_return(convention: ReturnConvention, level: f64, ret: f64) -> f64 {
    match convention {
        ReturnConvention::Log => level * ret.exp(),
        ReturnConvention::Absolute => level + ret,
    }
}

/// EWMA variance tracker with the fixed 0.95 daily decay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EwmaState {
    pub decay: f64,
    pub variances: Vec<f64>,
    pub conventions: Vec<ReturnConvention>,
}

impl EwmaState {
    pub fn new(initial_variances: Vec<f64>, conventions: Vec<ReturnConvention>) -> Self {
        assert_eq!(initial_variances.len(), conventions.len());
        Self {
            decay: 0.95,
            variances: initial_variances,
            conventions,
        }
    }

    /// Volatilities (square roots of the tracked variances).
    pub fn vols(&self) -> Vec<f64> {
        self.variances.iter().map(|v| v.sqrt()).collect()
    }
}

/// One EWMA step: `var <- decay*var + (1-decay)*return^2` per factor.
pub fn ewma_update(state: &mut EwmaState, returns: &[f64]) {
    assert_eq!(returns.len(), state.variances.len());
    for (v, r) in state.variances.iter_mut().zip(returns) {
        *v = state.decay * *v + (1.0 - state.decay) * r * r;
    }
}

/// Output of the scenario builder.
#[derive(Debug, Clone)]
pub struct FhsScenarios {
    pub scenarios: Vec<HestonParams>,
    /// Scenarios dropped because a historical volatility was zero.
    pub skipped: usize,
}

/// Build filtered-historical scenarios for the Heston factors.
///
/// `factors` and `vols` are chronological rows up to and including "today";
/// each of the most recent `max_scenarios` overlapping `horizon_days`
/// windows contributes one scenario: its joint factor returns are rescaled
/// by today's volatility over the window-start volatility and applied to
/// today's factor levels.
pub fn fhs_scenarios(
    factors: &[[f64; 6]],
    vols: &[[f64; 6]],
    horizon_days: usize,
    max_scenarios: usize,
    conventions: &[ReturnConvention; 6],
) -> Result<FhsScenarios> {
    if factors.len() != vols.len() {
        return Err(Error::Estimation(format!(
            "{} factor rows vs {} volatility rows",
            factors.len(),
            vols.len()
        )));
    }
    let n = factors.len();
    if horizon_days == 0 || n < horizon_days + 1 {
        return Err(Error::Estimation(format!(
            "need at least {} observations for a {horizon_days}-day window, got {n}",
            horizon_days + 1
        )));
    }
    let today = n - 1;
    let current = &factors[today];
    let current_vol = &vols[today];
    let available = n - horizon_days;
    let take = available.min(max_scenarios);
    let mut scenarios = Vec::with_capacity(take);
    let mut skipped = 0usize;
    // Most recent windows first.
    for w in 0..take {
        let start = available - 1 - w;
        let end = start + horizon_days;
        let mut row = [0.0; 6];
        let mut ok = true;
        for j in 0..6 {
            let hist_vol = vols[start][j];
            if hist_vol <= 0.0 {
                ok = false;
                break;
            }
            let r = factor_return(conventions[j], factors[start][j], factors[end][j]);
            let filtered = r * current_vol[j] / hist_vol;
            row[j] = apply_return(conventions[j], current[j], filtered);
        }
        if ok {
            scenarios.push(HestonParams::from_factors(&row));
        } else {
            skipped += 1;
        }
    }
    Ok(FhsScenarios { scenarios, skipped })
}
