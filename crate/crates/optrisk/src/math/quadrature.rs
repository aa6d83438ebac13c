//! Adaptive Simpson quadrature for the characteristic-function integrals.

use crate::error::{Error, Result};

/// Integrate `f` over `[a, b]` with adaptive Simpson refinement to the given
/// absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let lm = 0.5 * (a + mid);
    let rm = 0.5 * (mid + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Numeric(format!(
            "quadrature produced a non-finite value on [{a}, {b}]"
        )));
    }
    // Accept on tolerance, on intervals shrunk to rounding width, or on
    // residuals at the noise floor (refinement cannot improve those).
    if delta.abs() <= 15.0 * tol
        || (b - a) < 1e-13 * (1.0 + a.abs() + b.abs())
        || delta.abs() < 1e-15
    {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "quadrature failed to converge on [{a}, {b}] (residual {delta:e})"
        )));
    }
    let l = simpson_rec(f, a, mid, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_rec(f, mid, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Integrate `f` over `[0, inf)` by marching fixed-width panels until the
/// panel contribution drops below the tolerance.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: &F,
    panel_width: f64,
    tol: f64,
    max_panels: usize,
) -> Result<f64> {
    let mut total = 0.0;
    let mut a = 0.0;
    for i in 0..max_panels {
        let b = a + panel_width;
        let part = adaptive_simpson(f, a, b, tol)?;
        total += part;
        // Two consecutive negligible panels terminate the march; a single
        // small panel can be a zero of an oscillatory integrand.
        if i > 0 && part.abs() < tol {
            let next = adaptive_simpson(f, b, b + panel_width, tol)?;
            total += next;
            if next.abs() < tol {
                return Ok(total);
            }
            a = b + panel_width;
            continue;
        }
        a = b;
    }
    Err(Error::Numeric(format!(
        "semi-infinite quadrature did not decay within {max_panels} panels"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn integrates_gaussian_tail() {
        // int_0^inf exp(-x^2) dx = sqrt(pi)/2
        let v = integrate_semi_infinite(&|x: f64| (-x * x).exp(), 2.0, 1e-12, 100).unwrap();
        assert_abs_diff_eq!(v, PI.sqrt() / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn oscillatory_integrand() {
        // int_0^inf exp(-x) cos(3x) dx = 1 / (1 + 9)
        let v =
            integrate_semi_infinite(&|x: f64| (-x).exp() * (3.0 * x).cos(), 1.0, 1e-12, 200)
                .unwrap();
        assert_abs_diff_eq!(v, 0.1, epsilon = 1e-9);
    }
}
