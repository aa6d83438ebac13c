//! Synthetic Heston-world panels for tests and pipeline dry runs.
//!
//! The generator simulates the Heston state day by day and prices either
//! the lattice nodes directly (surface panel) or a delta-quoted grid wide
//! enough for the interpolation step to bracket the lattice.

use chrono::{Days, NaiveDate};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DayQuotes, LiquidLattice, RawQuote, RawQuotePanel, SurfacePanel, DT_DAY};
use crate::error::{Error, Result};
use crate::fhs::{heston_price, HestonParams};
use crate::math::{black_scholes as bs, spline::CubicSpline};
use crate::rng::{namespaced_rng, StreamKind};

/// Configuration of the synthetic world.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub params: HestonParams,
    /// Real-world drift of the underlying (per year).
    pub drift: f64,
    /// Flat short rate used for discount and forward curves.
    pub rate: f64,
    pub label: String,
    pub start_date: NaiveDate,
    /// Deltas quoted in the raw panel; wider than the lattice labels so
    /// every median node stays bracketed.
    pub quote_deltas: Vec<f64>,
    pub expiry_days: Vec<u32>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            params: HestonParams::from_classic(100.0, 0.04, 0.045, 3.0, 0.4, -0.6),
            drift: 0.03,
            rate: 0.01,
            label: "SYN".into(),
            start_date: NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(),
            quote_deltas: (1..20).map(|i| 0.05 * i as f64).collect(),
            expiry_days: vec![30, 60, 91, 122, 152, 182, 273, 365, 547, 730],
        }
    }
}

/// Daily Heston state path (spot and instantaneous variance).
fn simulate_state(params: &HestonParams, drift: f64, days: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let sigma = params.vol_of_vol();
    let rho = params.correlation();
    let rho_bar = (1.0 - rho * rho).sqrt();
    let mut rng = namespaced_rng(seed, StreamKind::Synthetic, 0);
    let mut spots = Vec::with_capacity(days);
    let mut vars = Vec::with_capacity(days);
    let mut s = params.s0;
    let mut nu = params.nu0;
    for _ in 0..days {
        spots.push(s);
        vars.push(nu);
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let z_s = z1;
        let z_nu = rho * z1 + rho_bar * z2;
        let nu_pos = nu.max(0.0);
        s *= ((drift - 0.5 * nu_pos) * DT_DAY + (nu_pos * DT_DAY).sqrt() * z_s).exp();
        nu += params.kappa * (params.theta - nu_pos) * DT_DAY
            + sigma * (nu_pos * DT_DAY).sqrt() * z_nu;
        // Full truncation keeps the variance process usable at zero.
        if nu < 1e-10 {
            nu = 1e-10;
        }
    }
    (spots, vars)
}

/// Simulate the Heston state daily and price every lattice node, producing
/// a surface panel directly. Deterministic per seed.
pub fn synthesize_heston_panel(
    params: &HestonParams,
    lattice: &LiquidLattice,
    days: usize,
    seed: u64,
) -> Result<SurfacePanel> {
    params.validate()?;
    if days < 2 {
        return Err(Error::domain("days", format!("need at least 2, got {days}")));
    }
    let config = SynthConfig::default();
    let (spots, vars) = simulate_state(params, config.drift, days, seed);
    let n = lattice.len();
    let mut prices = DMatrix::zeros(days, n);
    let mut day_params = params.clone();
    for (i, &nu) in vars.iter().enumerate() {
        day_params.nu0 = nu;
        for (j, node) in lattice.nodes().iter().enumerate() {
            let c = heston_price(&day_params, node.tau, node.m)?;
            prices[(i, j)] = c.clamp(1e-12, 1.0 - 1e-12);
        }
    }
    let dates: Vec<NaiveDate> = (0..days)
        .map(|i| config.start_date + Days::new(i as u64))
        .collect();
    SurfacePanel::new(
        lattice.clone(),
        dates,
        vec![config.label.clone(); days],
        spots,
        prices,
        DT_DAY,
    )
}

/// Simulate the Heston state daily and emit a delta-quoted raw panel in the
/// vendor wire format. Deterministic per seed.
pub fn synthesize_heston_quotes(config: &SynthConfig, days: usize, seed: u64) -> Result<RawQuotePanel> {
    config.params.validate()?;
    if days < 2 {
        return Err(Error::domain("days", format!("need at least 2, got {days}")));
    }
    let (spots, vars) = simulate_state(&config.params, config.drift, days, seed);
    let mut out = Vec::with_capacity(days);
    let mut day_params = config.params.clone();
    for i in 0..days {
        day_params.nu0 = vars[i];
        let date = config.start_date + Days::new(i as u64);
        let spot = spots[i];
        let mut quotes = Vec::new();
        for &tau_days in &config.expiry_days {
            let tau = f64::from(tau_days) * DT_DAY;
            let smile = implied_smile(&day_params, tau)?;
            for &delta in &config.quote_deltas {
                let m = solve_delta_moneyness(&smile, tau, delta)?;
                let c_norm = heston_price(&day_params, tau, m)?;
                let discount = (-config.rate * tau).exp();
                let forward = spot * (config.rate * tau).exp();
                quotes.push(RawQuote {
                    tau_days,
                    delta,
                    call_price: c_norm * discount * forward,
                    forward,
                    discount,
                });
            }
        }
        out.push(DayQuotes {
            date,
            label: config.label.clone(),
            spot,
            quotes,
        });
    }
    RawQuotePanel::new(out)
}

/// Implied-volatility smile of the current Heston state, as a spline over a
/// moneyness range wide enough to cover deltas in (0.02, 0.98).
fn implied_smile(params: &HestonParams, tau: f64) -> Result<CubicSpline> {
    let sigma_ref = 2.0 * params.nu0.max(params.theta).sqrt();
    let sq = sigma_ref * tau.sqrt();
    let d_lo = crate::math::normal::inverse_cdf(0.98);
    let d_hi = crate::math::normal::inverse_cdf(0.02);
    let m_lo = sq * (0.5 * sq - d_lo);
    let m_hi = sq * (0.5 * sq - d_hi);
    let grid = 15usize;
    let mut xs = Vec::with_capacity(grid);
    let mut ys = Vec::with_capacity(grid);
    for i in 0..grid {
        let m = m_lo + (m_hi - m_lo) * i as f64 / (grid - 1) as f64;
        let price = heston_price(params, tau, m)?;
        let iv = bs::implied_vol(price, tau, m, 1e-12)?;
        xs.push(m);
        ys.push(iv);
    }
    CubicSpline::new(xs, ys)
}

/// Solve for the moneyness whose smile-implied Black–Scholes delta equals
/// the target; delta is decreasing in moneyness, so bisect.
fn solve_delta_moneyness(smile: &CubicSpline, tau: f64, target_delta: f64) -> Result<f64> {
    let mut lo = smile.min_x();
    let mut hi = smile.max_x();
    let delta_at = |m: f64| -> Result<f64> { Ok(bs::delta(smile.eval(m)?, tau, m)) };
    if delta_at(lo)? < target_delta || delta_at(hi)? > target_delta {
        return Err(Error::Numeric(format!(
            "delta {target_delta} not bracketed by the smile grid"
        )));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if delta_at(mid)? > target_delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
