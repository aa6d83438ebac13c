//! Black–Scholes primitives in normalized coordinates.
//!
//! All prices here are forward/discount normalized: a call with
//! log-moneyness `m` and time-to-expiry `tau` on a unit forward, so prices
//! live in `[max(1 - e^m, 0), 1]` and depend only on `(sigma, tau, m)`.

use crate::error::{Error, Result};
use crate::math::normal;

/// Intrinsic value of the normalized call: `max(1 - e^m, 0)`.
#[inline]
pub fn intrinsic(m: f64) -> f64 {
    (1.0 - m.exp()).max(0.0)
}

/// Normalized Black–Scholes call price.
pub fn price(sigma: f64, tau: f64, m: f64) -> f64 {
    if sigma <= 0.0 || tau <= 0.0 {
        return intrinsic(m);
    }
    let sq = sigma * tau.sqrt();
    let d1 = -m / sq + 0.5 * sq;
    let d2 = d1 - sq;
    normal::cdf(d1) - m.exp() * normal::cdf(d2)
}

/// Normalized Black–Scholes vega `dprice/dsigma = sqrt(tau) * phi(d1)`.
pub fn vega(sigma: f64, tau: f64, m: f64) -> f64 {
    let sq = sigma * tau.sqrt();
    let d1 = -m / sq + 0.5 * sq;
    tau.sqrt() * normal::pdf(d1)
}

/// Forward call delta `Phi(d1)`.
pub fn delta(sigma: f64, tau: f64, m: f64) -> f64 {
    let sq = sigma * tau.sqrt();
    normal::cdf(-m / sq + 0.5 * sq)
}

/// Invert the normalized price for the implied volatility.
///
/// Safeguarded Newton iteration inside a bisection bracket; converges to
/// `price_tol` in price (default callers use 1e-10). Prices at or below
/// intrinsic return an inversion error, as do prices >= 1.
pub fn implied_vol(target: f64, tau: f64, m: f64, price_tol: f64) -> Result<f64> {
    if tau <= 0.0 {
        return Err(Error::domain("tau", format!("must be positive, got {tau}")));
    }
    let floor = intrinsic(m);
    if target <= floor || target >= 1.0 {
        return Err(Error::Numeric(format!(
            "price {target} outside invertible range ({floor}, 1) at (tau={tau}, m={m})"
        )));
    }
    // Bracket: grow the upper bound until the price exceeds the target.
    let mut lo = 1e-12;
    let mut hi = 0.5;
    while price(hi, tau, m) < target {
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::Numeric(format!(
                "implied vol bracket failed for price {target} at (tau={tau}, m={m})"
            )));
        }
    }
    let mut sigma = 0.5 * (lo + hi);
    for _ in 0..200 {
        let p = price(sigma, tau, m);
        let diff = p - target;
        if diff.abs() <= price_tol {
            return Ok(sigma);
        }
        if diff > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        let v = vega(sigma, tau, m);
        let newton = sigma - diff / v;
        sigma = if v > 1e-14 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::Numeric(format!(
        "implied vol did not reach tolerance {price_tol} for price {target}"
    )))
}

/// Recover `(log-moneyness, implied vol)` from a delta-quoted price.
///
/// A quote gives the forward delta and the normalized price; fixing
/// `d1 = inverse_cdf(delta)` makes the price strictly increasing in sigma,
/// so a single bisection resolves both unknowns.
pub fn moneyness_from_delta(delta_q: f64, target_price: f64, tau: f64) -> Result<(f64, f64)> {
    if !(0.0 < delta_q && delta_q < 1.0) {
        return Err(Error::domain(
            "delta",
            format!("must be in (0,1), got {delta_q}"),
        ));
    }
    if tau <= 0.0 {
        return Err(Error::domain("tau", format!("must be positive, got {tau}")));
    }
    let d1 = normal::inverse_cdf(delta_q);
    let sqrt_tau = tau.sqrt();
    let price_at = |sigma: f64| {
        let sq = sigma * sqrt_tau;
        let m = sq * (0.5 * sq - d1);
        delta_q - m.exp() * normal::cdf(d1 - sq)
    };
    if target_price <= 0.0 || target_price >= delta_q {
        // As sigma -> 0 the price tends to 0, as sigma -> inf it tends to delta.
        return Err(Error::Numeric(format!(
            "delta-quoted price {target_price} outside (0, {delta_q}) at delta {delta_q}"
        )));
    }
    let mut lo = 1e-10;
    let mut hi = 0.5;
    while price_at(hi) < target_price {
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::Numeric(
                "delta inversion bracket failed".to_string(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if price_at(mid) < target_price {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * (1.0 + hi) {
            break;
        }
    }
    let sigma = 0.5 * (lo + hi);
    let sq = sigma * sqrt_tau;
    let m = sq * (0.5 * sq - d1);
    Ok((m, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn atm_price_matches_hand_value() {
        // ATM, tau = 1, sigma = 0.2: price = 2*Phi(0.1) - 1.
        let p = price(0.2, 1.0, 0.0);
        assert_abs_diff_eq!(p, 2.0 * normal::cdf(0.1) - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p, 0.0796557, epsilon = 1e-7);
    }

    #[test]
    fn implied_vol_round_trip() {
        for &(sigma, tau, m) in &[
            (0.2, 1.0, 0.0),
            (0.35, 0.25, -0.1),
            (0.12, 2.0, 0.08),
            (0.6, 0.08, 0.02),
        ] {
            let p = price(sigma, tau, m);
            let iv = implied_vol(p, tau, m, 1e-12).unwrap();
            assert_abs_diff_eq!(iv, sigma, epsilon = 1e-8);
        }
    }

    #[test]
    fn implied_vol_rejects_out_of_bounds() {
        assert!(implied_vol(0.0, 1.0, 0.1, 1e-10).is_err());
        assert!(implied_vol(1.0, 1.0, 0.1, 1e-10).is_err());
        assert!(implied_vol(0.05, 1.0, -0.2, 1e-10).is_err()); // below intrinsic
    }

    #[test]
    fn delta_inversion_recovers_moneyness() {
        let cases: [(f64, f64, f64); 3] = [(0.2, 0.25, 0.3), (0.3, 1.0, 0.8), (0.15, 2.0, 0.5)];
        for &(sigma, tau, delta_q) in &cases {
            let sq = sigma * tau.sqrt();
            let d1 = normal::inverse_cdf(delta_q);
            let m = sq * (0.5 * sq - d1);
            let p = price(sigma, tau, m);
            let (m_rec, s_rec) = moneyness_from_delta(delta_q, p, tau).unwrap();
            assert_abs_diff_eq!(m_rec, m, epsilon = 1e-10);
            assert_abs_diff_eq!(s_rec, sigma, epsilon = 1e-10);
        }
    }

    #[test]
    fn price_monotone_in_moneyness() {
        let mut last = f64::INFINITY;
        for i in 0..20 {
            let m = -0.3 + 0.03 * i as f64;
            let p = price(0.25, 0.5, m);
            assert!(p < last);
            last = p;
        }
    }
}
