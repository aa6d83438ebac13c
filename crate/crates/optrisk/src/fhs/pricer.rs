//! Semi-analytic Heston pricing of normalized calls.
//!
//! Single-integral (Lewis) representation with the branch-cut-stable
//! characteristic function, so daily recalibration can sweep parameters
//! without crossing complex-log discontinuities. Prices are normalized:
//! unit forward, strike `e^m`, zero rates.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::HestonParams;
use crate::error::{Error, Result};
use crate::math::{black_scholes as bs, quadrature};

/// `ln(1 + w)` for complex `w`, accurate for small `|w|`.
fn ln1p_c(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        // Series keeps full relative accuracy where (1 + w).ln() would
        // round the small part away.
        let w2 = w * w;
        w - w2 / 2.0 + w2 * w / 3.0 - w2 * w2 / 4.0
    } else {
        (Complex64::new(1.0, 0.0) + w).ln()
    }
}

/// Characteristic function `E[exp(iz ln X_tau)]` of the log forward price,
/// in the formulation that keeps `g` inside the unit disk.
///
/// `beta - d` is evaluated as `-sigma^2 (iz + z^2)/(beta + d)`, which is
/// exact algebra and avoids the cancellation that otherwise destroys the
/// small-vol-of-vol regime.
fn char_fn(p: &HestonParams, tau: f64, z: Complex64) -> Complex64 {
    let sigma = p.vol_of_vol();
    let rho = p.correlation();
    let i = Complex64::new(0.0, 1.0);
    let beta = Complex64::new(p.kappa, 0.0) - i * rho * sigma * z;
    let w = i * z + z * z;
    let d = (beta * beta + sigma * sigma * w).sqrt();
    let beta_plus = beta + d;
    let q_over_s2 = -w / beta_plus; // (beta - d) / sigma^2
    let g = q_over_s2 * sigma * sigma / beta_plus;
    let e = (-d * tau).exp();
    let big_b = q_over_s2 * (1.0 - e) / (1.0 - g * e);
    let log_term = ln1p_c(-g * e) - ln1p_c(-g);
    let big_a = p.kappa * p.theta * (q_over_s2 * tau - 2.0 * log_term / (sigma * sigma));
    (big_a + big_b * p.nu0).exp()
}

/// Average variance over `[0, tau]` when the vol-of-vol vanishes.
fn integrated_variance(p: &HestonParams, tau: f64) -> f64 {
    if p.kappa.abs() < 1e-12 {
        p.nu0
    } else {
        p.theta + (p.nu0 - p.theta) * (-(-p.kappa * tau).exp_m1()) / (p.kappa * tau)
    }
}

/// Price a normalized call under the Heston model.
///
/// Absolute tolerance 1e-8 on the normalized price; near-degenerate
/// vol-of-vol falls back to Black–Scholes at the integrated variance.
pub fn heston_price(p: &HestonParams, tau: f64, m: f64) -> Result<f64> {
    p.validate()?;
    if !(tau > 0.0) {
        return Err(Error::domain("tau", format!("must be positive, got {tau}")));
    }
    let sigma = p.vol_of_vol();
    if sigma < 1e-8 {
        let var = integrated_variance(p, tau);
        return Ok(bs::price(var.sqrt(), tau, m));
    }
    let strike_ratio = m.exp();
    let integrand = |u: f64| {
        let z = Complex64::new(u, -0.5);
        let phase = Complex64::new(0.0, -u * m).exp();
        (phase * char_fn(p, tau, z)).re / (u * u + 0.25)
    };
    // The integrand decays on a scale set by the total variance; size the
    // panels so a handful covers the bulk.
    let scale = (integrated_variance(p, tau) * tau).max(1e-4).sqrt();
    let width = (4.0 / scale).clamp(2.0, 400.0);
    let integral = quadrature::integrate_semi_infinite(&integrand, width, 1e-10, 4000)?;
    Ok(1.0 - strike_ratio.sqrt() / PI * integral)
}

/// Normalized put via parity: `p = c - (1 - e^m)`.
pub fn heston_put(p: &HestonParams, tau: f64, m: f64) -> Result<f64> {
    Ok(heston_price(p, tau, m)? - (1.0 - m.exp()))
}
